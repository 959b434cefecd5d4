#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "rjpo/errors.hpp"
#include "rjpo/experiments.hpp"
#include "rjpo/io.hpp"

using namespace rjpo;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rjpo_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Csv, WriteThenRead) {
  const auto dir = scratch_dir("csv");
  write_csv(dir / "t.csv", {"a", "b"}, std::vector<std::vector<double>>{{1.0 / 3.0, -2}, {1e-17, 4}});
  std::vector<std::string> header;
  const auto rows = read_csv(dir / "t.csv", &header);
  EXPECT_EQ(header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], 1.0 / 3.0);
  EXPECT_EQ(rows[1][0], 1e-17);
  EXPECT_THROW(write_csv(dir / "bad.csv", {"a"}, std::vector<std::vector<double>>{{1, 2}}),
               ArgumentError);
}

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const auto kv = parse_key_values("# comment\n  seed = 4 \n\nout=/tmp/x\n");
  EXPECT_EQ(kv.at("seed"), "4");
  EXPECT_EQ(kv.at("out"), "/tmp/x");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_THROW(parse_key_values("novalue\n"), ConfigError);
  EXPECT_THROW(parse_key_values(" = 3\n"), ConfigError);
}

TEST(KeyValues, RoundTripThroughFile) {
  const auto dir = scratch_dir("kv");
  const KeyValues kv{{"alpha", "0.5"}, {"beta", "x y"}};
  write_key_values(dir / "c.cfg", kv);
  EXPECT_EQ(read_key_values(dir / "c.cfg"), kv);
  EXPECT_THROW(read_key_values(dir / "missing.cfg"), IoError);
}

TEST(Pgm, SixteenBitRoundTrip) {
  const auto dir = scratch_dir("pgm");
  Eigen::VectorXd img(6);
  img << 0, 1.4, 1.6, 65535, 70000, -3;
  write_pgm16(dir / "i.pgm", img, {2, 3});
  const auto back = read_pgm(dir / "i.pgm");
  EXPECT_EQ(back.dims.rows, 2);
  EXPECT_EQ(back.dims.cols, 3);
  Eigen::VectorXd want(6);
  want << 0, 1, 2, 65535, 65535, 0;
  EXPECT_EQ(back.pixels, want);
}

TEST(Pgm, ReadsEightBitWithComment) {
  const auto dir = scratch_dir("pgm8");
  {
    std::ofstream out(dir / "e.pgm", std::ios::binary);
    out << "P5\n# made by hand\n2 1\n255\n";
    out.put(static_cast<char>(7));
    out.put(static_cast<char>(200));
  }
  const auto img = read_pgm(dir / "e.pgm");
  EXPECT_EQ(img.pixels[0], 7);
  EXPECT_EQ(img.pixels[1], 200);
}

TEST(Pgm, RejectsMalformed) {
  const auto dir = scratch_dir("pgmbad");
  {
    std::ofstream out(dir / "a.pgm");
    out << "P2\n2 2\n255\n1 2 3 4\n";
  }
  EXPECT_THROW(read_pgm(dir / "a.pgm"), IoError);
  {
    std::ofstream out(dir / "b.pgm", std::ios::binary);
    out << "P5\n4 4\n255\nab";
  }
  EXPECT_THROW(read_pgm(dir / "b.pgm"), IoError);
}

TEST(EnsureDirectory, CreatesOrFails) {
  const auto dir = scratch_dir("ensure");
  EXPECT_NO_THROW(ensure_directory(dir / "a" / "b"));
  EXPECT_TRUE(fs::is_directory(dir / "a" / "b"));
  {
    std::ofstream f(dir / "file");
  }
  EXPECT_THROW(ensure_directory(dir / "file" / "sub"), IoError);
}

TEST(RunConfig, TypedLookupsAndUnknownKeys) {
  RunConfig c("toy", {{"n", "12"}, {"rho", "0.5"}, {"flag", "true"}, {"extra", "1"}});
  EXPECT_EQ(c.integer("n", 20), 12);
  EXPECT_EQ(c.number("rho", 0.8), 0.5);
  EXPECT_TRUE(c.flag("flag", false));
  EXPECT_EQ(c.number("sigma2", 1.0), 1.0);
  EXPECT_EQ(c.resolved().at("sigma2"), "1");
  EXPECT_THROW(c.reject_unknown(), ConfigError);

  RunConfig bad("toy", {{"n", "twelve"}});
  EXPECT_THROW(bad.integer("n", 1), ConfigError);
  EXPECT_THROW(RunConfig("toy", {{"command", "curve"}}), ConfigError);
}

TEST(RunConfig, NumberList) {
  RunConfig c("curve", {{"epsilon_grid", "1e-3, 1e-2,0.1"}});
  EXPECT_EQ(c.numbers("epsilon_grid", {}), (std::vector<double>{1e-3, 1e-2, 0.1}));
  RunConfig bad("curve", {{"epsilon_grid", "1e-3,x"}});
  EXPECT_THROW(bad.numbers("epsilon_grid", {}), ConfigError);
}

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(1e-6, 1e-1, 6);
  ASSERT_EQ(g.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(std::log10(g[i]), -6.0 + i, 1e-12);
}

TEST(Commands, ConfigErrors) {
  const auto dir = scratch_dir("cmd");
  const std::string out = (dir / "o").string();
  RunConfig empty_grid("curve", {{"epsilon_grid", ""}, {"out", out}});
  EXPECT_THROW(cmd_curve(empty_grid), ConfigError);
  RunConfig kappa("adapt", {{"kappa", "1.5"}, {"out", out}});
  EXPECT_THROW(cmd_adapt(kappa), ConfigError);
  RunConfig rho("toy", {{"rho", "1"}, {"out", out}});
  EXPECT_THROW(cmd_toy(rho), ConfigError);
  RunConfig mode("adapt", {{"mode", "other"}, {"out", out}});
  EXPECT_THROW(cmd_adapt(mode), ConfigError);
  RunConfig unknown("toy", {{"bogus", "1"}, {"out", out}});
  EXPECT_THROW(cmd_toy(unknown), ConfigError);
}

TEST(Commands, ToyWritesMetadataAndIsDeterministic) {
  const auto dir = scratch_dir("toy");
  auto run = [&](const fs::path& out) {
    RunConfig c("toy", {{"n_max", "300"}, {"out", out.string()}, {"seed", "5"}});
    return cmd_toy(c);
  };
  const auto s1 = run(dir / "a");
  run(dir / "b");
  for (const char* f : {"rmse.csv", "chain_epo.csv", "chain_tpo.csv", "chain_rjpo.csv", "problem.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_TRUE(s1.contains("rjpo"));
  const auto cfg = read_key_values(dir / "a" / "run.cfg");
  EXPECT_EQ(cfg.at("command"), "toy");
  EXPECT_EQ(cfg.at("seed"), "5");
  EXPECT_TRUE(fs::exists(dir / "a" / "metadata.json"));
}
