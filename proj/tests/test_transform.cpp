#include <doctest.h>

#include <cmath>

#include "gscalei/errors.hpp"
#include "gscalei/transform.hpp"
#include "test_util.hpp"

using namespace gscalei;
using gscalei::testutil::central_gradient;

namespace {
Eigen::VectorXd random_vector(Rng& rng, int size, double sd = 1.0) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = rng.normal(0.0, sd);
  return v;
}
}  // namespace

TEST_CASE("sampled decoders are well conditioned") {
  Rng rng(7);
  const DecoderGlm tiny = sample_decoder(1, 1, rng);
  CHECK(tiny.matrix()(0, 0) != 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const DecoderGlm dec = sample_decoder(5, 25, rng);
    CHECK(detail::smallest_singular_value(dec.matrix()) > 1e-6);
  }
  CHECK_THROWS_AS(DecoderGlm(Eigen::MatrixXd::Zero(4, 2)), std::invalid_argument);
  CHECK_THROWS_AS(DecoderGlm(Eigen::MatrixXd::Identity(2, 4)), std::invalid_argument);
}

TEST_CASE("decode basics") {
  Rng rng(8);
  const DecoderGlm dec = sample_decoder(3, 7, rng);
  CHECK(decode(dec, Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);

  const DecoderGlm scalar(Eigen::MatrixXd::Constant(1, 1, 1.0));
  CHECK(decode(scalar, Eigen::VectorXd::Constant(1, 1.0))[0] ==
        doctest::Approx(std::tanh(1.0)).epsilon(1e-14));

  const Eigen::VectorXd x = decode(dec, random_vector(rng, 3, 2.0));
  CHECK(x.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("decoder jacobian values and finite differences") {
  Rng rng(9);
  const DecoderGlm dec = sample_decoder(3, 6, rng);
  CHECK((decoder_jacobian(dec, Eigen::VectorXd::Zero(3)) - dec.matrix())
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  const DecoderGlm scalar(Eigen::MatrixXd::Constant(1, 1, 2.0));
  const double expected = 2.0 * (1.0 - std::tanh(2.0) * std::tanh(2.0));
  CHECK(decoder_jacobian(scalar, Eigen::VectorXd::Constant(1, 1.0))(0, 0) ==
        doctest::Approx(expected).epsilon(1e-12));

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd z = random_vector(rng, 3);
    const Eigen::MatrixXd jac = decoder_jacobian(dec, z);
    for (int out = 0; out < 6; ++out) {
      const Eigen::VectorXd row = central_gradient(
          [&](const Eigen::VectorXd& p) { return decode(dec, p)[out]; }, z, 1e-5);
      CHECK((jac.row(out).transpose() - row).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("encode/decode round trip through the pseudoinverse") {
  Rng rng(10);
  const DecoderGlm dec = sample_decoder(4, 9, rng);
  const EncoderLinear enc(pseudo_inverse(dec.matrix()));
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd z = random_vector(rng, 4, 1.5);
    const Eigen::VectorXd back = encode(enc, decode(dec, z));
    CHECK((back - z).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("observed score diff: trivial and transport identities") {
  Rng rng(11);
  const DecoderGlm dec = sample_decoder(4, 9, rng);
  const Eigen::VectorXd z = random_vector(rng, 4);
  CHECK(observed_score_diff(dec, z, Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);

  const DecoderGlm scalar(Eigen::MatrixXd::Constant(1, 1, 1.0));
  CHECK(observed_score_diff(scalar, Eigen::VectorXd::Zero(1),
                            Eigen::VectorXd::Constant(1, 3.0))[0] ==
        doctest::Approx(3.0).epsilon(1e-12));

  // J^T [J^dagger]^T v = v for full-column-rank J, and the transported vector
  // lies in the Jacobian's column space.
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd probe = random_vector(rng, 4, 1.5);
    const Eigen::VectorXd diff = random_vector(rng, 4);
    const Eigen::VectorXd transported = observed_score_diff(dec, probe, diff);
    const Eigen::MatrixXd jac = decoder_jacobian(dec, probe);
    CHECK((jac.transpose() * transported - diff).cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::MatrixXd proj = jac * (jac.transpose() * jac).ldlt()
                                           .solve(jac.transpose() * transported);
    CHECK((transported - proj).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("encode guards the arctanh domain") {
  const EncoderLinear enc(Eigen::MatrixXd::Identity(2, 2));
  Eigen::VectorXd x(2);
  x << 0.5, 1.0 - 1e-13;
  CHECK_THROWS_AS(encode(enc, x), DomainViolation);
  x << 0.0, std::tanh(0.5);
  CHECK(encode(enc, x)[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("encoder inverse round trips") {
  Rng rng(12);
  // Square invertible case: exact inverse.
  Eigen::MatrixXd h_sq(3, 3);
  for (int i = 0; i < 9; ++i) h_sq(i / 3, i % 3) = rng.normal(0.0, 1.0);
  const EncoderLinear enc_sq(h_sq);
  const DecoderGlm dec_sq = sample_decoder(3, 3, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = decode(dec_sq, random_vector(rng, 3));
    const Eigen::VectorXd back = encoder_inverse(enc_sq, encode(enc_sq, x));
    CHECK((back - x).cwiseAbs().maxCoeff() < 1e-10);
  }
  // Rectangular case: right-inverse direction.
  Eigen::MatrixXd h(3, 8);
  for (int i = 0; i < 24; ++i) h(i / 8, i % 8) = rng.normal(0.0, 0.5);
  const EncoderLinear enc(h);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd zhat = random_vector(rng, 3, 0.5);
    const Eigen::VectorXd round = enc.matrix() *
                                  detail::guarded_atanh(encoder_inverse(enc, zhat).array())
                                      .matrix();
    CHECK((round - zhat).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK(encoder_inverse(enc, Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rank-deficient encoders are rejected") {
  Eigen::MatrixXd h(2, 4);
  h.row(0) = Eigen::RowVector4d(1, 2, 3, 4);
  h.row(1) = 2.0 * h.row(0);
  const EncoderLinear enc(h);
  CHECK_THROWS_AS(encoder_inverse(enc, Eigen::Vector2d(1, 1)), RankDeficientEncoder);
  CHECK_THROWS_AS(encoder_inverse_jacobian(enc, Eigen::Vector2d(1, 1)),
                  RankDeficientEncoder);
}

TEST_CASE("encoder inverse jacobian matches finite differences") {
  Rng rng(13);
  Eigen::MatrixXd h(3, 6);
  for (int i = 0; i < 18; ++i) h(i / 6, i % 6) = rng.normal(0.0, 0.6);
  const EncoderLinear enc(h);
  const Eigen::VectorXd zhat = random_vector(rng, 3, 0.4);
  const Eigen::MatrixXd jac = encoder_inverse_jacobian(enc, zhat);
  for (int out = 0; out < 6; ++out) {
    const Eigen::VectorXd row = central_gradient(
        [&](const Eigen::VectorXd& p) { return encoder_inverse(enc, p)[out]; }, zhat, 1e-5);
    CHECK((jac.row(out).transpose() - row).cwiseAbs().maxCoeff() < 1e-6);
  }

  // Square invertible case at zero: the jacobian is H^{-1}.
  Eigen::MatrixXd hs(3, 3);
  for (int i = 0; i < 9; ++i) hs(i / 3, i % 3) = rng.normal(0.0, 1.0);
  const EncoderLinear enc_sq(hs);
  CHECK((encoder_inverse_jacobian(enc_sq, Eigen::VectorXd::Zero(3)) - hs.inverse())
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("latent to observed to latent transport is the identity") {
  Rng rng(14);
  const DecoderGlm dec = sample_decoder(4, 12, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd z = random_vector(rng, 4, 1.2);
    const Eigen::VectorXd diff = random_vector(rng, 4);
    const Eigen::VectorXd observed = observed_score_diff(dec, z, diff);
    const Eigen::VectorXd back = decoder_jacobian(dec, z).transpose() * observed;
    CHECK((back - diff).cwiseAbs().maxCoeff() < 1e-8);
  }
}
