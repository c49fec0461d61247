#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "orip/grid_io.hpp"

using namespace orip;
namespace fs = std::filesystem;

namespace {

class GridIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("orip_grid_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  std::string parse_error(const std::string& text) {
    try {
      io::load_grid(write("bad.txt", text));
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(GridIo, EsriNorthFirstAndCorner) {
  const auto g = io::load_grid(write("a.asc",
                                     "ncols 3\nnrows 2\nxllcorner 10\nyllcorner 20\ncellsize 2\n"
                                     "NODATA_value -9999\n1 2 3\n4 5 6\n"));
  EXPECT_EQ(g.geometry.rows, 2);
  EXPECT_EQ(g.geometry.cols, 3);
  EXPECT_DOUBLE_EQ(g.extent().x1_min, 10);
  EXPECT_DOUBLE_EQ(g.extent().x1_max, 16);
  EXPECT_DOUBLE_EQ(g.extent().x2_max, 24);
  // The first file row is the northern (highest x2) row.
  EXPECT_EQ(g.values(1, 0), 1.0);
  EXPECT_EQ(g.values(0, 2), 6.0);
}

TEST_F(GridIo, EsriCenterOrigin) {
  const auto g = io::load_grid(write("c.asc", "ncols 2\nnrows 2\nxllcenter 0.5\nyllcenter 0.5\ncellsize 1\n1 2\n3 4\n"));
  EXPECT_DOUBLE_EQ(g.extent().x1_min, 0.0);
  EXPECT_DOUBLE_EQ(g.extent().x2_min, 0.0);
}

TEST_F(GridIo, NodataFilledFromNearest) {
  const auto g = io::load_grid(write("n.asc",
                                     "ncols 3\nnrows 3\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -1\n"
                                     "-1 -1 -1\n-1 -1 -1\n-1 -1 7\n"));
  EXPECT_TRUE((g.values.array() == 7.0).all());
  const auto c = io::load_grid(write("n.csv",
                                     "x1_min,x1_max,x2_min,x2_max,rows,cols\n0,2,0,2,2,2\n1,nan\n,4\n"));
  EXPECT_EQ(c.values(0, 1), 1.0);
  EXPECT_EQ(c.values(1, 0), 1.0);  // ties go to the lowest row-major index
  EXPECT_EQ(c.values(1, 1), 4.0);
}

TEST_F(GridIo, ParseErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3\n").find(":7:"),
            std::string::npos);
  EXPECT_NE(parse_error("ncols 2\nnrows 2\nxllcorner 0\ncellsize 1\n1 2\n3 4\n").find("incomplete header"),
            std::string::npos);
  EXPECT_NE(parse_error("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 x\n3 4\n").find(":6:"),
            std::string::npos);
  EXPECT_NE(parse_error("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value 0\n0 0\n0 0\n")
                .find("NODATA"),
            std::string::npos);
  EXPECT_NE(parse_error("x1_min,x1_max,x2_min,x2_max,rows,cols\n0,1,0,1,2,2\n1,2\n").find("expected 2"),
            std::string::npos);
  EXPECT_THROW(io::load_grid((dir_ / "missing.asc").string()), ParseError);
}

TEST_F(GridIo, RoundTripBothFormats) {
  world::TerrainSpec spec;
  spec.rows = 12;
  spec.cols = 17;
  const auto grid = world::synth_terrain(spec);
  {
    std::ofstream out(dir_ / "t.asc");
    io::write_esri(grid, out);
  }
  {
    std::ofstream out(dir_ / "t.csv");
    io::write_csv_grid(grid, out);
  }
  for (const char* name : {"t.asc", "t.csv"}) {
    const auto back = io::load_grid((dir_ / name).string());
    EXPECT_EQ(back.values, grid.values) << name;
    EXPECT_DOUBLE_EQ(back.extent().x1_max, grid.extent().x1_max);
    EXPECT_DOUBLE_EQ(back.extent().x2_max, grid.extent().x2_max);
  }
}

TEST_F(GridIo, EsriNeedsSquareCells) {
  world::GridGeometry g;
  g.rows = 2;
  g.cols = 2;
  g.extent = {0, 2, 0, 4};
  std::ostringstream out;
  EXPECT_THROW(io::write_esri(world::ElevationGrid(g, Matrix::Zero(2, 2)), out), InvalidParameter);
}
