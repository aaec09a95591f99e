#ifndef USGAN_LOSSES_HPP
#define USGAN_LOSSES_HPP

#include <string>
#include <vector>

#include "usgan/autograd.hpp"

namespace usgan {

enum class LossSide { kDiscriminator, kGenerator };
enum class LossForm { kLog, kLeastSquares };

LossForm loss_form_from_string(const std::string& s);
std::string to_string(LossForm f);

struct LossWeights {
    double lambda1 = 10.0;   // adversarial realism term
    double lambda2 = 10.0;   // adversarial content term
    double w_content = 1.0;
    double w_reverb = 1.0;
};

struct LossBreakdown {
    double l_dr = 0.0;       // generator-side adversarial (realism)
    double l_dc = 0.0;       // generator-side adversarial (content)
    double l_content = 0.0;
    double l_reverb = 0.0;
    double total_generator = 0.0;
    double total_d_r = 0.0;  // discriminator-side loss minimized by D_R
    double total_d_c = 0.0;
};

struct GramMatrix {
    Tensor values;           // (C,C)
    int layer_index = 0;
    double normalization = 0.0;  // C*H'*W' divisor applied
};

// Adversarial loss over patch score maps. The discriminator side is the
// negated two-expectation objective (a value to minimize); the generator
// side is the non-saturating surrogate in log form or the
// least-squares pull-to-real in LS form. Raw scores; the log form applies
// the sigmoid internally.
ad::Var adversarial_loss(const ad::Var& scores_real, const ad::Var& scores_fake,
                         LossSide side, LossForm form, const std::string& producer);

// Realism pair: real scores from D_R(y in T), fake from D_R(G(x)).
inline ad::Var adversarial_loss_dr(const ad::Var& scores_real_y,
                                   const ad::Var& scores_fake_gx, LossSide side,
                                   LossForm form) {
    return adversarial_loss(scores_real_y, scores_fake_gx, side, form, "D_R");
}

// Content pair: both real (x in S) and fake (G(x)) scores come from source
// samples, implemented exactly as stated.
inline ad::Var adversarial_loss_dc(const ad::Var& scores_real_x,
                                   const ad::Var& scores_fake_gx, LossSide side,
                                   LossForm form) {
    return adversarial_loss(scores_real_x, scores_fake_gx, side, form, "D_C");
}

// Mean absolute difference between same-tap feature maps.
ad::Var content_loss(const ad::Var& features_gx, const ad::Var& features_x);

// Channel-correlation matrix of a feature map, divided by C*H'*W'.
GramMatrix gram(const Tensor& feature_map, int layer_index = 0);

// Sum over the three taps of the Frobenius norm of Gram differences.
ad::Var reverberation_loss(const std::vector<ad::Var>& taps_gx,
                           const std::vector<ad::Var>& taps_y);

// Combines already-evaluated parts per the full objective.
LossBreakdown total_objective(double l_dr_gen, double l_dc_gen, double l_content,
                              double l_reverb, double total_d_r, double total_d_c,
                              const LossWeights& w);

}  // namespace usgan

#endif
