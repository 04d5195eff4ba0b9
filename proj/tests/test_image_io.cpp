#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wmlab/corpus.hpp"
#include "wmlab/image_io.hpp"

using namespace wmlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wmlab_test_image_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("8-bit PNG round trip is exact on the 256-level grid") {
  const Image img = quantize8(synthetic_cover(16, 24, 3));
  write_png(scratch("a.png"), img);
  const Image back = read_png(scratch("a.png"));
  REQUIRE(back.same_shape(img));
  CHECK(max_abs_diff(back, img) < 1e-12);
}

TEST_CASE("PPM round trips at 255 and 65535") {
  const Image img = synthetic_cover(9, 7, 4);
  write_ppm(scratch("b.ppm"), img, 255);
  CHECK(max_abs_diff(read_ppm(scratch("b.ppm")), img) <= 0.5 / 255.0 + 1e-12);
  write_ppm(scratch("c.ppm"), img, 65535);
  CHECK(max_abs_diff(read_ppm(scratch("c.ppm")), img) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("extension dispatch and malformed input") {
  const Image img(4, 4, 0.5);
  write_image(scratch("d.ppm"), img);
  CHECK(read_image(scratch("d.ppm")).same_shape(img));
  CHECK_THROWS(read_image(scratch("missing.png")));
  std::ofstream(scratch("bad.ppm")) << "P9\n1 1\n255\n0 0 0\n";
  CHECK_THROWS_AS(read_ppm(scratch("bad.ppm")), FormatError);
}
