#include "gmvae/dists.hpp"

#include <cmath>
#include <numbers>

namespace gmvae {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

DiagGaussian::DiagGaussian(Tensor mean_, Tensor logvar_)
    : mean(std::move(mean_)), logvar(std::move(logvar_)) {
    if (mean.shape() != logvar.shape())
        throw DimensionError("diag gaussian: mean shape " + shape_str(mean.shape()) +
                             " does not match logvar shape " + shape_str(logvar.shape()));
}

BernoulliParam::BernoulliParam(const Tensor& probabilities)
    : mean(clamp(probabilities, kProbClamp, 1.0 - kProbClamp)) {}

Tensor gaussian_log_pdf(const Tensor& z, const DiagGaussian& g) {
    if (z.shape() != g.mean.shape())
        throw DimensionError("gaussian_log_pdf: z shape " + shape_str(z.shape()) +
                             " does not match distribution dimension " +
                             shape_str(g.mean.shape()));
    const double d = static_cast<double>(g.dim());
    const Tensor diff = sub(z, g.mean);
    const Tensor quad = mul(square(diff), exp(negate(g.logvar)));
    const Tensor s = scale(sum(add(g.logvar, quad)), -0.5);
    return add(s, Tensor::scalar(-0.5 * d * kLog2Pi));
}

Tensor kl_to_std_normal(const DiagGaussian& g) {
    const Tensor t = sub(sub(add(exp(g.logvar), square(g.mean)), Tensor::scalar(1.0)), g.logvar);
    return scale(sum(t), 0.5);
}

Tensor sample_reparameterized(const DiagGaussian& g, const Tensor& noise) {
    if (noise.shape() != g.mean.shape())
        throw DimensionError("sample_reparameterized: noise shape " + shape_str(noise.shape()) +
                             " does not match distribution dimension " +
                             shape_str(g.mean.shape()));
    const Tensor eps = noise.detached();
    return add(g.mean, mul(exp(scale(g.logvar, 0.5)), eps));
}

Tensor bernoulli_log_lik(const Tensor& x, const BernoulliParam& p) {
    if (x.shape() != p.mean.shape())
        throw DimensionError("bernoulli_log_lik: x shape " + shape_str(x.shape()) +
                             " does not match parameter dimension " + shape_str(p.mean.shape()));
    for (double v : x.data())
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("bernoulli_log_lik: x entry " + std::to_string(v) +
                              " outside [0,1]");
    const Tensor one = Tensor::scalar(1.0);
    const Tensor t = add(mul(x, log(p.mean)), mul(sub(one, x), log(sub(one, p.mean))));
    return sum(t);
}

double flat_sigma_for_delta(double delta, std::size_t d) {
    if (!(delta > 0.0))
        throw DomainError("flat_sigma_for_delta: delta must be positive, got " +
                          std::to_string(delta));
    if (d == 0) throw DomainError("flat_sigma_for_delta: dimension must be positive");
    const double dd = static_cast<double>(d);
    return std::pow((1.0 / delta) * std::pow(2.0 * std::numbers::pi, -dd / 2.0), 1.0 / dd);
}

} // namespace gmvae
