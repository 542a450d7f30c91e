#include <stdexcept>

#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "unida/config.hpp"
#include "unida/csv.hpp"

using namespace unida;

TEST_CASE("format/parse double round trips exactly") {
  SeededRng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(40)) - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(format_double(0.1)) == 0.1);
  CHECK_THROWS(parse_double("1.2.3"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("csv table round trip") {
  CsvTable t;
  t.comments = {"unida-test v1"};
  t.header = {"a", "b"};
  t.rows = {{"1", format_double(0.30000000000000004)}, {"2", "x"}};
  const std::string path = "test_csv_roundtrip.csv";
  write_csv(t, path);
  const CsvTable back = read_csv(path);
  CHECK(back.comments == t.comments);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.require_column("b") == 1);
  CHECK_THROWS_WITH_AS(back.require_column("zz"), doctest::Contains("missing column"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("config parsing and overrides") {
  const std::string text =
      "# a comment\n"
      "dataset = unida\n"
      "split.source_private = 15\n"
      "split.common = 3\n"
      "split.target_private = 4\n"
      "loss.lambda = 0.7\n"
      "ssl.variant = plain_l2\n"
      "sweep.spcr = 1/5, 1/3, 1, 3, 5\n";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.split.n_source_private == 15);
  CHECK(cfg.loss.lambda == 0.7);
  CHECK(cfg.ssl_variant == SslVariant::PlainL2);
  CHECK(cfg.sweep_spcr.size() == 5);
  CHECK(cfg.sweep_spcr[0] == doctest::Approx(0.2));
  CHECK(cfg.sweep_spcr[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_WITH_AS(parse_config_text("loss.lamda = 0.5\n"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("loss.lambda == 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.momentum = 1.5\n"), ConfigError);
}

TEST_CASE("config hash covers semantic content only") {
  ExperimentConfig a, b;
  CHECK(a.config_hash() == b.config_hash());
  b.out_dir = "elsewhere";  // output location is not semantic
  CHECK(a.config_hash() == b.config_hash());
  b.loss.alpha = 0.25;
  CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("split_for_spcr finds the smallest realization") {
  const LabelSplit base{0, 3, 4};
  const LabelSplit s1 = split_for_spcr(0.2, base);
  CHECK(s1.n_source_private == 1);
  CHECK(s1.n_common == 5);
  CHECK(s1.n_target_private == 4);
  const LabelSplit s2 = split_for_spcr(5.0, base);
  CHECK(s2.n_source_private == 15);
  CHECK(s2.n_common == 3);
  const LabelSplit s3 = split_for_spcr(1.0 / 3.0, base);
  CHECK(s3.n_source_private == 1);
  CHECK(s3.n_common == 3);
  CHECK_THROWS_AS(split_for_spcr(0.123456789, base), ConfigError);
}
