#include "usgan/losses.hpp"

#include <cmath>

#include "usgan/common.hpp"

namespace usgan {

using ad::Var;

LossForm loss_form_from_string(const std::string& s) {
    if (s == "log") return LossForm::kLog;
    if (s == "least_squares") return LossForm::kLeastSquares;
    throw DataError("unknown loss_form '" + s + "' (expected log | least_squares)");
}

std::string to_string(LossForm f) {
    return f == LossForm::kLog ? "log" : "least_squares";
}

namespace {
void check_finite(const Var& scores, const std::string& producer) {
    if (!scores.value().all_finite())
        throw DivergenceError("non-finite scores produced by " + producer);
}
}  // namespace

Var adversarial_loss(const Var& scores_real, const Var& scores_fake, LossSide side,
                     LossForm form, const std::string& producer) {
    check_finite(scores_fake, producer);
    if (side == LossSide::kDiscriminator) check_finite(scores_real, producer);

    if (form == LossForm::kLog) {
        if (side == LossSide::kDiscriminator) {
            // -E[log s(real)] - E[log(1 - s(fake))]
            Var real_term = ad::mean_softplus(scores_real, -1.0);
            Var fake_term = ad::mean_softplus(scores_fake, +1.0);
            return ad::scaled_sum({{1.0, real_term}, {1.0, fake_term}});
        }
        // non-saturating: -E[log s(fake)]
        return ad::mean_softplus(scores_fake, -1.0);
    }
    if (side == LossSide::kDiscriminator) {
        Var real_term = ad::mean_squared_to_const(scores_real, 1.0);
        Var fake_term = ad::mean_squared_to_const(scores_fake, 0.0);
        return ad::scaled_sum({{1.0, real_term}, {1.0, fake_term}});
    }
    return ad::mean_squared_to_const(scores_fake, 1.0);
}

Var content_loss(const Var& features_gx, const Var& features_x) {
    if (!features_gx.value().same_shape(features_x.value()))
        throw ShapeError("content_loss: feature shapes differ, " +
                         Tensor::shape_str(features_gx.value().shape()) + " vs " +
                         Tensor::shape_str(features_x.value().shape()));
    return ad::mean_abs_diff(features_gx, features_x);
}

GramMatrix gram(const Tensor& feature_map, int layer_index) {
    ad::NoGradGuard guard;
    Var g = ad::gram(Var::leaf(feature_map));
    GramMatrix out;
    out.values = g.value();
    out.layer_index = layer_index;
    out.normalization = static_cast<double>(feature_map.dim(0)) *
                        feature_map.dim(1) * feature_map.dim(2);
    return out;
}

Var reverberation_loss(const std::vector<Var>& taps_gx, const std::vector<Var>& taps_y) {
    if (taps_gx.size() != 3 || taps_y.size() != 3)
        throw ShapeError("reverberation_loss expects exactly 3 taps per side, got " +
                         std::to_string(taps_gx.size()) + " and " +
                         std::to_string(taps_y.size()));
    std::vector<std::pair<double, Var>> terms;
    for (std::size_t l = 0; l < 3; ++l) {
        if (taps_gx[l].value().dim(0) != taps_y[l].value().dim(0))
            throw ShapeError("reverberation_loss: tap " + std::to_string(l + 1) +
                             " channel mismatch");
        terms.emplace_back(1.0, ad::frobenius_diff(ad::gram(taps_gx[l]),
                                                   ad::gram(taps_y[l])));
    }
    return ad::scaled_sum(terms);
}

LossBreakdown total_objective(double l_dr_gen, double l_dc_gen, double l_content,
                              double l_reverb, double total_d_r, double total_d_c,
                              const LossWeights& w) {
    for (double v : {l_dr_gen, l_dc_gen, l_content, l_reverb, total_d_r, total_d_c})
        if (!std::isfinite(v)) throw DivergenceError("non-finite loss component");
    LossBreakdown b;
    b.l_dr = l_dr_gen;
    b.l_dc = l_dc_gen;
    b.l_content = l_content;
    b.l_reverb = l_reverb;
    b.total_generator = w.lambda1 * l_dr_gen + w.lambda2 * l_dc_gen +
                        w.w_content * l_content + w.w_reverb * l_reverb;
    b.total_d_r = total_d_r;
    b.total_d_c = total_d_c;
    return b;
}

}  // namespace usgan
