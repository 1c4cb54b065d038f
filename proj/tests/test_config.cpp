#include <string>

#include <gtest/gtest.h>

#include "mixrates/config.hpp"

using namespace mixrates;

TEST(ConfigParser, KeyValueLinesWithComments) {
  const auto m = parse_config(
      "# ladder for the shorth\n"
      "experiment = shorth   # trailing comment\n"
      "\n"
      "  n_values=1000, 2000,4000 ,8000\n"
      "replicates = 60\n"
      "replicates = 70\n");
  EXPECT_EQ(m.at("experiment"), "shorth");
  EXPECT_EQ(m.at("n_values"), "1000, 2000,4000 ,8000");
  EXPECT_EQ(m.at("replicates"), "70");
  EXPECT_EQ(m.size(), 3U);
}

TEST(ConfigParser, MalformedLines) {
  EXPECT_THROW(parse_config("experiment shorth\n"), ValidationError);
  EXPECT_THROW(parse_config(" = 3\n"), ValidationError);
}

TEST(LadderConfigFrom, AppliesAndValidates) {
  const auto cfg = ladder_config_from(parse_config(
      "experiment = lasso\nn_values = 250,500,1000,2000\nreplicates = 80\nseed = 42\nthreads = 2\n"
      "lambda0 = 1.5\ngamma = 0.5\nsigma = 2\nbeta1 = 0.5\nbeta2 = 0\nfixed_design = true\n"));
  EXPECT_EQ(cfg.experiment, Experiment::Lasso);
  EXPECT_EQ(cfg.n_values, (std::vector<std::size_t>{250, 500, 1000, 2000}));
  EXPECT_EQ(cfg.replicates, 80U);
  EXPECT_EQ(cfg.master_seed, 42U);
  EXPECT_EQ(cfg.threads, 2U);
  EXPECT_DOUBLE_EQ(cfg.lasso.lambda0, 1.5);
  EXPECT_DOUBLE_EQ(cfg.lasso.sigma, 2.0);
  EXPECT_DOUBLE_EQ(cfg.lasso.beta1, 0.5);
  EXPECT_TRUE(cfg.lasso.fixed_design);
}

TEST(LadderConfigFrom, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 100\ncolour = blue\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 100,x\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 100\nreplicates = 10\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 200,100\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("experiment = ridge\nn_values = 100\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 100\nfixed_design = maybe\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("n_values = 100\nthreads = 0\n")), ValidationError);
  EXPECT_THROW(ladder_config_from(parse_config("experiment = lasso\nn_values = 100\ngamma = 2\n")), ValidationError);
}

TEST(LadderConfigFrom, RoundTripsThroughTheResolvedMap) {
  LadderConfig cfg;
  cfg.experiment = Experiment::Kmeans;
  cfg.n_values = {1000, 2000};
  cfg.replicates = 300;
  cfg.master_seed = 17;
  cfg.lasso.lambda0 = 0.1;
  const auto back = ladder_config_from(to_config_map(cfg));
  EXPECT_EQ(back.experiment, cfg.experiment);
  EXPECT_EQ(back.n_values, cfg.n_values);
  EXPECT_EQ(back.replicates, cfg.replicates);
  EXPECT_EQ(back.master_seed, cfg.master_seed);
  EXPECT_EQ(back.lasso.lambda0, cfg.lasso.lambda0);
}
