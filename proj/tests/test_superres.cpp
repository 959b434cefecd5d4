#include <gtest/gtest.h>

#include "rjpo/errors.hpp"
#include "rjpo/superres.hpp"
#include "test_util.hpp"

using namespace rjpo;

namespace {

SuperResConfig small_config() {
  SuperResConfig c;
  c.hi_res = {8, 8};
  c.frames = 3;
  c.factor = 2;
  c.fwhm = 2.0;
  return c;
}

// Dense H and D built by direct index arithmetic.
Eigen::MatrixXd dense_blur(const Eigen::MatrixXd& k, ImageDims d, Index orow, Index ocol) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d.size(), d.size());
  for (Index i = 0; i < d.rows; ++i)
    for (Index j = 0; j < d.cols; ++j)
      for (Index a = 0; a < k.rows(); ++a)
        for (Index c = 0; c < k.cols(); ++c) {
          const Index si = ((i - (a - orow)) % d.rows + d.rows) % d.rows;
          const Index sj = ((j - (c - ocol)) % d.cols + d.cols) % d.cols;
          b(i * d.cols + j, si * d.cols + sj) += k(a, c);
        }
  return b;
}

Eigen::MatrixXd dense_forward(const SuperResModel& m) {
  const ImageDims d = m.hi_dims();
  const auto& k = m.psf_kernel();
  const Eigen::MatrixXd blur = dense_blur(k, d, k.rows() / 2, k.cols() / 2);
  const ImageDims lo = m.low_dims();
  const Index f = m.config().factor;
  Eigen::MatrixXd h(m.config().frames * lo.size(), d.size());
  Index row = 0;
  for (int fr = 0; fr < m.config().frames; ++fr) {
    const PixelOffset o = frame_offset(fr, static_cast<int>(f));
    for (Index i = 0; i < lo.rows; ++i)
      for (Index j = 0; j < lo.cols; ++j)
        h.row(row++) = blur.row((i * f + o.row) * d.cols + j * f + o.col);
  }
  return h;
}

}  // namespace

TEST(LaplacePsf, NormalizedSymmetricWithHalfMaximumAtFwhm) {
  const auto k = laplace_psf(4.0, {64, 64});
  EXPECT_NEAR(k.sum(), 1.0, 1e-14);
  ASSERT_EQ(k.rows() % 2, 1);
  const Index c = k.rows() / 2;
  EXPECT_EQ(k.maxCoeff(), k(c, c));
  EXPECT_TRUE(k.isApprox(k.transpose()));
  EXPECT_TRUE(k.isApprox(k.colwise().reverse()));
  // one axis: value at distance fwhm / 2 is half the peak
  EXPECT_NEAR(k(c, c + 2) / k(c, c), 0.5, 1e-12);
}

TEST(LaplacePsf, TruncatedMassBelowTolerance) {
  const double fwhm = 4.0;
  const auto k = laplace_psf(fwhm, {256, 256});
  const double q = std::exp(-2.0 * std::log(2.0) / fwhm);
  const Index h = k.rows() / 2;
  // unnormalized mass inside vs the infinite separable sum
  const double one_axis = (1 + q) / (1 - q);
  double inside = 1;
  for (Index i = 1; i <= h; ++i) inside += 2 * std::pow(q, static_cast<double>(i));
  EXPECT_LT(1 - (inside / one_axis) * (inside / one_axis), 1e-4);
  // one pixel narrower would not be enough
  inside -= 2 * std::pow(q, static_cast<double>(h));
  EXPECT_GE(1 - (inside / one_axis) * (inside / one_axis), 1e-4);
}

TEST(LaplacePsf, CappedAtImageSize) {
  const auto k = laplace_psf(4.0, {8, 10});
  EXPECT_EQ(k.rows(), 7);
  EXPECT_EQ(k.cols(), 9);
  EXPECT_THROW(laplace_psf(0.0, {8, 8}), ConfigError);
}

TEST(FrameOffset, CyclesThroughPhases) {
  EXPECT_EQ(frame_offset(0, 2).row, 0);
  EXPECT_EQ(frame_offset(1, 2).row, 1);
  EXPECT_EQ(frame_offset(1, 2).col, 0);
  EXPECT_EQ(frame_offset(2, 2).row, 0);
  EXPECT_EQ(frame_offset(2, 2).col, 1);
  EXPECT_EQ(frame_offset(5, 2).col, 0);
}

TEST(SuperResModel, DimensionsAndValidation) {
  const SuperResModel m(small_config());
  EXPECT_EQ(m.n(), 64);
  EXPECT_EQ(m.m(), 3 * 16);
  auto bad = small_config();
  bad.hi_res = {9, 8};
  EXPECT_THROW(SuperResModel{bad}, ConfigError);
  bad = small_config();
  bad.frames = 0;
  EXPECT_THROW(SuperResModel{bad}, ConfigError);
}

TEST(SuperResModel, ForwardMatchesDenseOracle) {
  const SuperResModel m(small_config());
  const Eigen::MatrixXd h = dense_forward(m);
  RngStream s(1);
  const Eigen::VectorXd x = s.standard_normal_vector(m.n());
  EXPECT_LT((m.forward()->apply(x) - h * x).norm(), 1e-12 * (h * x).norm());
}

TEST(SuperResModel, ConditionalMatchesDenseAssembly) {
  const SuperResModel m(small_config());
  const Eigen::MatrixXd h = dense_forward(m);
  const Eigen::MatrixXd d = dense_blur(laplacian_stencil(), m.hi_dims(), 1, 1);
  RngStream s(2);
  const Eigen::VectorXd y = s.standard_normal_vector(m.m());
  const double gy = 3.0, gx = 0.7;
  const auto t = m.conditional(y, gy, gx);
  const Eigen::MatrixXd want = gy * h.transpose() * h + gx * d.transpose() * d;
  EXPECT_TRUE(t.precision.to_dense().isApprox(want, 1e-12));
  EXPECT_LT((t.potential - gy * h.transpose() * y).norm(), 1e-12 * t.potential.norm());
  EXPECT_THROW(m.conditional(y, 0.0, 1.0), NumericalError);
  EXPECT_THROW(m.conditional(Eigen::VectorXd::Zero(3), 1.0, 1.0), ArgumentError);
}

TEST(SuperResModel, LaplacianAnnihilatesConstants) {
  const SuperResModel m(small_config());
  EXPECT_LT(m.laplacian()->apply(Eigen::VectorXd::Constant(m.n(), 5.0)).norm(), 1e-12);
}

TEST(Phantom, RangeAndStructure) {
  const auto x = phantom({64, 64});
  EXPECT_GE(x.minCoeff(), 20.0);
  EXPECT_LE(x.maxCoeff(), 270.0);
  EXPECT_GT(x.maxCoeff() - x.minCoeff(), 100.0);
}

TEST(Synthesize, HitsRequestedSnr) {
  auto c = small_config();
  c.hi_res = {64, 64};
  c.snr_db = 20.0;
  const SuperResModel m(c);
  const auto truth = phantom(c.hi_res);
  RngStream s(3);
  const auto obs = synthesize(m, truth, s);
  EXPECT_NEAR(empirical_snr_db(m, truth, obs), 20.0, 0.3);
  EXPECT_LT((obs.y - m.forward()->apply(truth) - obs.noise).norm(), 1e-9);

  c.snr_db = std::numeric_limits<double>::infinity();
  const SuperResModel clean(c);
  const auto none = synthesize(clean, truth, s);
  EXPECT_EQ(none.noise.norm(), 0.0);
}

TEST(GammaConditionals, MeansMatchShapeTimesScale) {
  const SuperResModel m(small_config());
  RngStream s(4);
  GibbsState st;
  st.x = s.standard_normal_vector(m.n());
  const Eigen::VectorXd y = m.forward()->apply(st.x) + s.standard_normal_vector(m.m());
  const double rss = (y - m.forward()->apply(st.x)).squaredNorm();
  const double rough = m.laplacian()->apply(st.x).squaredNorm();
  double gy = 0, gx = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    gy += sample_gamma_y(st, m, y, s);
    gx += sample_gamma_x(st, m, s);
  }
  EXPECT_NEAR(gy / n, (1.0 + m.m() / 2.0) * 2.0 / rss, 0.01 * (1.0 + m.m() / 2.0) * 2.0 / rss);
  EXPECT_NEAR(gx / n, (1.0 + (m.n() - 1) / 2.0) * 2.0 / rough,
              0.01 * (1.0 + (m.n() - 1) / 2.0) * 2.0 / rough);
}

TEST(GammaConditionals, ZeroResidualIsNumericalError) {
  const SuperResModel m(small_config());
  GibbsState st;
  st.x = Eigen::VectorXd::Constant(m.n(), 2.0);
  const Eigen::VectorXd y = m.forward()->apply(st.x);
  RngStream s(5);
  EXPECT_THROW(sample_gamma_y(st, m, y, s), NumericalError);
  EXPECT_THROW(sample_gamma_x(st, m, s), NumericalError);
}

TEST(SampleX, DenseAndCgExactPathsAgree) {
  const SuperResModel m(small_config());
  RngStream s(6);
  const Eigen::VectorXd y = m.forward()->apply(phantom(m.hi_dims())) + s.standard_normal_vector(m.m());
  GibbsState st;
  st.x = initial_image(m, y);
  st.gamma_y = 1.0;
  st.gamma_x = 0.01;
  RngStream a(7), b(7);
  const auto dense = sample_x(st, m, y, a, ExactSampler{1e-12, 1024});
  const auto cg = sample_x(st, m, y, b, ExactSampler{1e-12, 0});
  EXPECT_LT((dense.next_sample - cg.next_sample).norm(), 1e-8 * dense.next_sample.norm());
  EXPECT_GT(cg.cg_iterations, 0);
}

TEST(SampleX, AdaptiveSamplerOwnsController) {
  const SuperResModel m(small_config());
  RngStream s(8);
  const Eigen::VectorXd y = m.forward()->apply(phantom(m.hi_dims()));
  GibbsState st;
  st.x = initial_image(m, y);
  EXPECT_FALSE(st.controller.has_value());
  sample_x(st, m, y, s, AdaptiveRjpoSampler{});
  ASSERT_TRUE(st.controller.has_value());
  EXPECT_EQ(st.controller->step_index(), 2);
}

TEST(InitialImage, NearestNeighbourOfFirstFrame) {
  const SuperResModel m(small_config());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m.m());
  for (Index i = 0; i < 16; ++i) y[i] = static_cast<double>(i);
  const auto x = initial_image(m, y);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(x[2], 1.0);
  EXPECT_EQ(x[8 + 2], 1.0);
  EXPECT_EQ(x[16], 4.0);
}

TEST(RunGibbs, ReproducibleAndValidated) {
  const SuperResModel m(small_config());
  RngStream d(9);
  const auto obs = synthesize(m, phantom(m.hi_dims()), d);
  GibbsOptions opts;
  opts.iterations = 30;
  opts.burn_in = 5;
  RngStream a(10), b(10);
  const auto r1 = run_gibbs(m, obs.y, opts, AdaptiveRjpoSampler{}, a);
  const auto r2 = run_gibbs(m, obs.y, opts, AdaptiveRjpoSampler{}, b);
  EXPECT_EQ(r1.gamma_y, r2.gamma_y);
  EXPECT_EQ(r1.posterior_mean, r2.posterior_mean);
  EXPECT_EQ(r1.gamma_x.size(), 30u);
  EXPECT_EQ(r1.tracked_pixel, 4 * 8 + 4);

  opts.burn_in = 29;
  EXPECT_THROW(run_gibbs(m, obs.y, opts, ExactSampler{}, a), ArgumentError);
  opts.burn_in = 5;
  opts.tracked_pixel = 64;
  EXPECT_THROW(run_gibbs(m, obs.y, opts, ExactSampler{}, a), ArgumentError);
}

TEST(Synthesize, IdentityModelCopiesImagePerFrame) {
  SuperResConfig c;
  c.hi_res = {4, 4};
  c.frames = 2;
  c.factor = 1;
  c.fwhm = 0.01;  // collapses to a single-tap kernel
  c.snr_db = std::numeric_limits<double>::infinity();
  const SuperResModel m(c);
  ASSERT_EQ(m.psf_kernel().size(), 1);
  const Eigen::VectorXd truth = Eigen::VectorXd::Constant(16, 7.0);
  RngStream s(11);
  const auto obs = synthesize(m, truth, s);
  ASSERT_EQ(obs.y.size(), 32);
  EXPECT_LT((obs.y - Eigen::VectorXd::Constant(32, 7.0)).norm(), 1e-12);
}

TEST(GammaConditionals, KnownResidualMean) {
  // M = 4 observations, ||y - Hx||^2 = 2 -> mean (1 + 2) * 2 / 2 = 3
  SuperResConfig c;
  c.hi_res = {4, 4};
  c.frames = 1;
  c.factor = 2;
  c.fwhm = 1.0;
  const SuperResModel m(c);
  ASSERT_EQ(m.m(), 4);
  GibbsState st;
  RngStream s(12);
  st.x = s.standard_normal_vector(16);
  Eigen::VectorXd y = m.forward()->apply(st.x);
  y[0] += 1.0;
  y[3] -= 1.0;
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_gamma_y(st, m, y, s);
  EXPECT_NEAR(sum / n, 3.0, 0.02 * 3.0);
}

TEST(SuperResModel, WeakPriorPosteriorMeanFitsData) {
  SuperResConfig c;
  c.hi_res = {8, 8};
  c.frames = 1;
  c.factor = 1;
  c.fwhm = 0.01;
  const SuperResModel m(c);
  RngStream s(13);
  const Eigen::VectorXd y = 50.0 * s.standard_normal_vector(64);
  const auto t = m.conditional(y, 1.0, 1e-8);
  const Eigen::VectorXd mean = t.precision.to_dense().llt().solve(t.potential);
  EXPECT_LT((mean - y).norm(), 1e-5 * y.norm());
}

TEST(SampleX, ExactRjpoMatchesCholeskyOracle) {
  const SuperResModel m(small_config());
  RngStream s(14);
  const Eigen::VectorXd y = m.forward()->apply(phantom(m.hi_dims())) + s.standard_normal_vector(m.m());
  const auto t = m.conditional(y, 0.5, 0.05);
  const Eigen::MatrixXd q = t.precision.to_dense();
  const Eigen::VectorXd mu = q.llt().solve(t.potential);
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(q.inverse()).matrixL();
  const int n = 300;
  Eigen::MatrixXd a(n, 64), b(n, 64);
  RngStream sa(15), sb(16);
  Eigen::VectorXd x = mu;
  for (int i = 0; i < n; ++i) {
    const auto step = rjpo_step<double>(t, x, sa, 0.0);
    ASSERT_TRUE(step.accepted);
    x = step.next_sample;
    a.row(i) = x.transpose();
    b.row(i) = (mu + l * sb.standard_normal_vector(64)).transpose();
  }
  RngStream perm(17);
  EXPECT_GT(rjpo::testing::energy_test_pvalue(a, b, 200, perm), 0.01);
}

TEST(RunGibbs, BurnInEqualToIterationsRejected) {
  const SuperResModel m(small_config());
  GibbsOptions opts;
  opts.iterations = 20;
  opts.burn_in = 20;
  RngStream s(18);
  EXPECT_THROW(run_gibbs(m, Eigen::VectorXd::Ones(m.m()), opts, ExactSampler{}, s), ArgumentError);
}
