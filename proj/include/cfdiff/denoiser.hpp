#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

/// Epsilon-predictor interface used by the reverse process. Implementations
/// must be usable read-only from concurrent tasks.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Image predict_eps(const Image& x_t, int t) const = 0;
};

/// Closed-form posterior mean for a diagonal Gaussian target x0 ~ N(m, diag(v)):
///   E[x0|x_t] = m + sqrt(abar) v (x_t - sqrt(abar) m) / (abar v + 1 - abar)
///   eps_hat   = (x_t - sqrt(abar) E[x0|x_t]) / sqrt(1 - abar)
/// m and v are flattened to image order; size-1 vectors broadcast.
Image analytic_gaussian_eps(const std::vector<double>& m, const std::vector<double>& v,
                            const Image& x_t, int t, const NoiseSchedule& schedule);

class AnalyticGaussianDenoiser : public Denoiser {
public:
    AnalyticGaussianDenoiser(std::vector<double> m, std::vector<double> v, NoiseSchedule schedule);
    Image predict_eps(const Image& x_t, int t) const override;

    const std::vector<double>& mean() const { return m_; }
    const std::vector<double>& variance() const { return v_; }

private:
    std::vector<double> m_, v_;
    NoiseSchedule schedule_;
};

struct ConvLayerDesc {
    int in_ch;
    int out_ch;
    int ksize;
};

/// Small fully-convolutional epsilon-predictor: 3x3 convs with reflect
/// padding, leaky ReLU between layers, and t/T broadcast as an extra input channel.
/// Templated on the scalar type so gradient tests can run the exact same code
/// in double while inference runs in float.
template <class Real>
class ConvNetT {
public:
    ConvNetT(std::vector<ConvLayerDesc> layers, uint64_t seed);
    ConvNetT() = default;

    const std::vector<ConvLayerDesc>& layers() const { return layers_; }
    size_t parameter_count() const;

    // planes: in_ch planes of h*w each, concatenated
    std::vector<Real> forward(const std::vector<Real>& planes, int h, int w) const;

    // Forward + backward for the per-element MSE loss against `target`
    // (out_ch planes). Returns the loss and accumulates parameter gradients
    // (same layout as parameters()) into `grad`.
    Real loss_and_grad(const std::vector<Real>& planes, const std::vector<Real>& target, int h,
                       int w, std::vector<Real>& grad) const;

    std::vector<Real>& parameters() { return params_; }
    const std::vector<Real>& parameters() const { return params_; }

private:
    std::vector<ConvLayerDesc> layers_;
    std::vector<Real> params_;  // per layer: weights [out][in][k][k], then bias [out]
    std::vector<size_t> layer_offsets_;
};

using ConvNet = ConvNetT<float>;

class ConvNetDenoiser : public Denoiser {
public:
    ConvNetDenoiser(ConvNet net, int image_channels, int total_steps);
    Image predict_eps(const Image& x_t, int t) const override;

    const ConvNet& net() const { return net_; }
    int image_channels() const { return image_channels_; }
    int total_steps() const { return total_steps_; }

private:
    ConvNet net_;
    int image_channels_;
    int total_steps_;
};

struct TrainConfig {
    int iterations = 4000;
    int batch_size = 8;
    double learning_rate = 0.08;
    uint64_t seed = 1;
    int patch = 32;
    int log_interval = 200;
};

std::vector<ConvLayerDesc> default_conv_layers(int image_channels);

/// Trains the epsilon-prediction objective with plain SGD (exponentially
/// decayed learning rate, per-t loss weighted by the reverse-step sensitivity
/// beta_t/(1-abar_t)) and hand-derived backprop. Deterministic for a fixed
/// seed; runs in float32 (the serialized precision).
ConvNetDenoiser train_conv_denoiser(const std::vector<Image>& dataset,
                                    const NoiseSchedule& schedule, const TrainConfig& config,
                                    std::ostream* log = nullptr);

// Model file: magic "CFDN1", JSON header line, then raw little-endian float32
// weights in header order.
void save_denoiser(const ConvNetDenoiser& denoiser, const std::string& path);
ConvNetDenoiser load_denoiser(const std::string& path);

}  // namespace cfdiff
