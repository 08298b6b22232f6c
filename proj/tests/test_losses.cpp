// Copyright 2026 The bpvae authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "bpvae/losses.hpp"
#include "bpvae/rng.hpp"
#include "bpvae/training.hpp"

using namespace bpvae;

namespace {

DiagonalGaussian random_gaussian(Rng& rng, Eigen::Index dim, double spread) {
  return DiagonalGaussian(spread * rng.normal_vector(dim),
                          0.7 * rng.normal_vector(dim));
}

struct Fixture {
  DiagonalGaussian y_post_x, y_post_d, x_post, d_post, prior, likelihood;
  Eigen::VectorXd target;
};

Fixture random_fixture(Rng& rng, Eigen::Index latent, Eigen::Index bins) {
  Fixture f;
  f.y_post_x = random_gaussian(rng, latent, 1.5);
  f.y_post_d = random_gaussian(rng, latent, 1.5);
  f.x_post = random_gaussian(rng, latent, 1.5);
  f.d_post = random_gaussian(rng, latent, 1.5);
  f.prior = DiagonalGaussian::standard(latent);
  f.likelihood = random_gaussian(rng, bins, 1.0);
  f.target = rng.normal_vector(bins);
  return f;
}

EncoderSpec tiny_encoder(int heads) {
  EncoderSpec s;
  s.conv_channels = {3, 4};
  s.latent_dim = 4;   // L = 4 per the acceptance criterion
  s.num_heads = heads;
  s.input_bins = 9;   // F = 9
  return s;
}

DecoderSpec tiny_decoder(int latent) {
  DecoderSpec s;
  s.conv_channels = {4, 3};
  s.out_dim = 9;
  s.latent_dim = latent;
  return s;
}

// Central finite differences of fn() w.r.t. every entry of every parameter
// tensor against the analytic gradients already accumulated in t->grad.
template <typename Fn>
double max_rel_grad_error(std::vector<nn::Tensor*> params, Fn&& fn,
                          double h = 1e-5) {
  double worst = 0.0;
  for (nn::Tensor* t : params) {
    for (Eigen::Index j = 0; j < t->value.cols(); j++)
      for (Eigen::Index i = 0; i < t->value.rows(); i++) {
        const double saved = t->value(i, j);
        t->value(i, j) = saved + h;
        const double fp = fn();
        t->value(i, j) = saved - h;
        const double fm = fn();
        t->value(i, j) = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double g = t->grad(i, j);
        const double rel =
            std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-6});
        worst = std::max(worst, rel);
      }
  }
  return worst;
}

}  // namespace

TEST_CASE("vae_loss assembles beta * KL - log-likelihood") {
  Rng rng(1);
  for (int i = 0; i < 10; i++) {
    const auto f = random_fixture(rng, 5, 7);
    const double beta = 0.25 * (i + 1);
    const LossBreakdown b =
        vae_loss(f.y_post_x, f.prior, f.likelihood, f.target, beta);
    CHECK(b.kl_speech == doctest::Approx(kl(f.y_post_x, f.prior)).epsilon(1e-12));
    CHECK(b.reconstruction ==
          doctest::Approx(log_pdf(f.likelihood, f.target)).epsilon(1e-12));
    CHECK(std::abs(b.total - (beta * b.kl_speech - b.reconstruction)) <= 1e-9);
  }
}

// Acceptance criterion 2: the three loss families agree identically where
// the paper says they coincide.
TEST_CASE("beta_pvae(1,1) == pvae and beta_pvae(0,beta) == latent_only") {
  Rng rng(2);
  for (int i = 0; i < 20; i++) {
    const auto f = random_fixture(rng, 6, 8);
    const LossBreakdown p = pvae_loss(f.y_post_x, f.y_post_d, f.x_post,
                                      f.d_post, f.prior, f.likelihood, f.target);
    const LossBreakdown b =
        beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post, f.prior,
                       f.likelihood, f.target, 1.0, 1.0);
    CHECK(std::abs(p.total - b.total) <= 1e-12);
    CHECK(std::abs(p.kl_speech - b.kl_speech) <= 1e-12);
    CHECK(std::abs(p.kl_noise - b.kl_noise) <= 1e-12);
    CHECK(std::abs(p.latent_ratio_speech - b.latent_ratio_speech) <= 1e-12);
    CHECK(std::abs(p.latent_ratio_noise - b.latent_ratio_noise) <= 1e-12);
    CHECK(std::abs(p.reconstruction - b.reconstruction) <= 1e-12);

    const double beta = 0.5 + i;
    const LossBreakdown bz =
        beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post, f.prior,
                       f.likelihood, f.target, 0.0, beta);
    const LossBreakdown lo = latent_only_loss(f.y_post_x, f.y_post_d, f.x_post,
                                              f.d_post, f.prior, beta);
    CHECK(std::abs(bz.total - lo.total) <= 1e-12);
    CHECK(std::abs(bz.kl_speech - lo.kl_speech) <= 1e-12);
    CHECK(std::abs(bz.latent_ratio_noise - lo.latent_ratio_noise) <= 1e-12);
  }
}

TEST_CASE("loss breakdown satisfies the weighted-sum invariant") {
  Rng rng(3);
  for (int i = 0; i < 10; i++) {
    const auto f = random_fixture(rng, 4, 6);
    const double alpha = rng.uniform() * 2.0, beta = rng.uniform() * 5.0 + 0.1;
    const LossBreakdown b =
        beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post, f.prior,
                       f.likelihood, f.target, alpha, beta);
    const double recomposed =
        b.beta * (b.kl_speech + b.latent_ratio_speech + b.kl_noise +
                  b.latent_ratio_noise) -
        b.alpha * b.reconstruction;
    CHECK(std::abs(b.total - recomposed) <= 1e-9);
  }
}

TEST_CASE("loss is jointly homogeneous in (alpha, beta)") {
  Rng rng(4);
  const auto f = random_fixture(rng, 5, 7);
  const LossBreakdown one =
      beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post, f.prior,
                     f.likelihood, f.target, 1.0, 2.0);
  const LossBreakdown three =
      beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post, f.prior,
                     f.likelihood, f.target, 3.0, 6.0);
  CHECK(three.total == doctest::Approx(3.0 * one.total).epsilon(1e-12));
}

TEST_CASE("latent ratio term: analytic equals the CE difference and the paper"
          " identity KL(p,t) + ratio(t) = KL(p, prior)") {
  Rng rng(5);
  for (int i = 0; i < 20; i++) {
    const auto p = random_gaussian(rng, 5, 2.0);
    const auto t = random_gaussian(rng, 5, 2.0);
    const auto prior = DiagonalGaussian::standard(5);
    GaussianBatch pb{p.mean, p.log_var}, tb{t.mean, t.log_var};
    const double ratio = ratio_mean(pb, tb, prior);
    CHECK(ratio == doctest::Approx(cross_entropy(p, prior) - cross_entropy(p, t))
                       .epsilon(1e-12));
    // The Eq. (6)-(8) latent terms collapse: value is teacher-independent.
    CHECK(kl(p, t) + ratio == doctest::Approx(kl(p, prior)).epsilon(1e-10));
  }
}

TEST_CASE("sampled ratio estimate is unbiased (1e5 samples per fixture)") {
  Rng rng(6);
  const int chunks = 100, chunk = 1000;
  for (int fixture = 0; fixture < 20; fixture++) {
    const Eigen::Index dim = 3 + (fixture % 4);
    const auto p = random_gaussian(rng, dim, 2.0);
    const auto t = random_gaussian(rng, dim, 2.0);
    const auto prior = DiagonalGaussian::standard(dim);
    const GaussianBatch pb{p.mean.replicate(1, chunk),
                           p.log_var.replicate(1, chunk)};
    const GaussianBatch tb{t.mean.replicate(1, chunk),
                           t.log_var.replicate(1, chunk)};
    const GaussianBatch one_p{p.mean, p.log_var}, one_t{t.mean, t.log_var};
    const double exact = ratio_mean(one_p, one_t, prior);

    Rng mc(900 + fixture);
    Eigen::ArrayXd means(chunks);
    for (int c = 0; c < chunks; c++) {
      const Eigen::MatrixXd eps = mc.normal_matrix(dim, chunk);
      means[c] = ratio_mean(pb, tb, prior, &eps);
    }
    const double mc_mean = means.mean();
    const double se =
        std::sqrt((means - mc_mean).square().sum() / (chunks - 1) / chunks);
    // 1% relative, widened to 4 standard errors when noise dominates.
    CHECK(std::abs(mc_mean - exact) <=
          std::max(0.01 * std::abs(exact), 4.0 * se));
  }
}

TEST_CASE("batch term gradients match finite differences") {
  Rng rng(7);
  const Eigen::Index dim = 4, batch = 3;
  GaussianBatch p{rng.normal_matrix(dim, batch), 0.5 * rng.normal_matrix(dim, batch)};
  GaussianBatch q{rng.normal_matrix(dim, batch), 0.5 * rng.normal_matrix(dim, batch)};
  const BatchTermGrad g = kl_mean_grad(p, q);
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < batch; j++)
    for (Eigen::Index i = 0; i < dim; i++) {
      GaussianBatch pp = p;
      pp.mean(i, j) += h;
      GaussianBatch pm = p;
      pm.mean(i, j) -= h;
      const double fd = (kl_mean_grad(pp, q).value - kl_mean_grad(pm, q).value) /
                        (2.0 * h);
      CHECK(g.d_mean(i, j) == doctest::Approx(fd).epsilon(1e-5));
      GaussianBatch vp = p;
      vp.log_var(i, j) += h;
      GaussianBatch vm = p;
      vm.log_var(i, j) -= h;
      const double fdv =
          (kl_mean_grad(vp, q).value - kl_mean_grad(vm, q).value) / (2.0 * h);
      CHECK(g.d_log_var(i, j) == doctest::Approx(fdv).epsilon(1e-5));
    }
}

// Acceptance criterion 3: analytic parameter gradients of all three loss
// families on tiny networks (L=4, F=9) vs central finite differences.
TEST_CASE("gradient check: stage-1 VAE objective") {
  VaeModel model(tiny_encoder(2), tiny_decoder(4), 11, "fd_vae");
  Rng rng(8);
  const Eigen::MatrixXd x = rng.normal_matrix(9, 3);
  const Eigen::MatrixXd eps = rng.normal_matrix(4, 3);
  const double beta = 1.3;

  for (nn::Tensor* t : model.params()) t->zero_grad();
  vae_objective(model, x, beta, eps, true);
  const double worst = max_rel_grad_error(model.params(), [&] {
    return vae_objective(model, x, beta, eps, false).objective();
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: beta-PVAE objective with decoder (Eq. 6/7)") {
  NsVaeModel model(tiny_encoder(4), tiny_decoder(8), 12, "fd_pvae");
  Rng rng(9);
  const Eigen::MatrixXd y = rng.normal_matrix(9, 3);
  const GaussianBatch xt{rng.normal_matrix(4, 3), 0.5 * rng.normal_matrix(4, 3)};
  const GaussianBatch dt{rng.normal_matrix(4, 3), 0.5 * rng.normal_matrix(4, 3)};
  const Eigen::MatrixXd eps_x = rng.normal_matrix(4, 3);
  const Eigen::MatrixXd eps_d = rng.normal_matrix(4, 3);
  const double alpha = 0.8, beta = 2.0;

  for (nn::Tensor* t : model.params()) t->zero_grad();
  nsvae_objective(model, y, xt, dt, alpha, beta, false, &eps_x, &eps_d, nullptr,
                  true);
  const double worst = max_rel_grad_error(model.params(), [&] {
    return nsvae_objective(model, y, xt, dt, alpha, beta, false, &eps_x, &eps_d,
                           nullptr, false)
        .objective();
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: latent-only objective, no decoder (Eq. 8)") {
  NsVaeModel model(tiny_encoder(4), std::nullopt, 13, "fd_lat");
  Rng rng(10);
  const Eigen::MatrixXd y = rng.normal_matrix(9, 3);
  const GaussianBatch xt{rng.normal_matrix(4, 3), 0.5 * rng.normal_matrix(4, 3)};
  const GaussianBatch dt{rng.normal_matrix(4, 3), 0.5 * rng.normal_matrix(4, 3)};

  for (nn::Tensor* t : model.params()) t->zero_grad();
  nsvae_objective(model, y, xt, dt, 0.0, 1.0, false, nullptr, nullptr, nullptr,
                  true);
  const double worst = max_rel_grad_error(model.params(), [&] {
    return nsvae_objective(model, y, xt, dt, 0.0, 1.0, false, nullptr, nullptr,
                           nullptr, false)
        .objective();
  });
  CHECK(worst < 1e-4);
}

TEST_CASE("objective breakdown ties to the per-frame loss family") {
  NsVaeModel model(tiny_encoder(4), std::nullopt, 14, "tie");
  Rng rng(11);
  const Eigen::MatrixXd y = rng.normal_matrix(9, 5);
  const GaussianBatch xt{rng.normal_matrix(4, 5), 0.4 * rng.normal_matrix(4, 5)};
  const GaussianBatch dt{rng.normal_matrix(4, 5), 0.4 * rng.normal_matrix(4, 5)};
  const double beta = 3.0;
  const LossBreakdown b =
      nsvae_objective(model, y, xt, dt, 0.0, beta, false, nullptr, nullptr,
                      nullptr, false);

  const auto [px, pd] = model.encode(y);
  const auto prior = DiagonalGaussian::standard(4);
  double total = 0.0;
  for (Eigen::Index j = 0; j < 5; j++) {
    const LossBreakdown frame = latent_only_loss(
        px.column(j), pd.column(j), xt.column(j), dt.column(j), prior, beta);
    total += frame.total;
  }
  CHECK(b.total == doctest::Approx(total / 5.0).epsilon(1e-9));
}

TEST_CASE("non-finite inputs are rejected with a named term") {
  Rng rng(12);
  auto f = random_fixture(rng, 4, 6);
  f.target[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(beta_pvae_loss(f.y_post_x, f.y_post_d, f.x_post, f.d_post,
                                 f.prior, f.likelihood, f.target, 1.0, 1.0),
                  std::exception);
  CHECK_THROWS(vae_loss(f.y_post_x, f.prior, f.likelihood, f.target, -1.0));
}
