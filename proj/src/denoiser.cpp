#include "cfdiff/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "cfdiff/rng.hpp"

namespace cfdiff {

namespace {

// Symmetric reflection into [0, n); valid for |overshoot| <= n.
inline int reflect(int i, int n) {
    if (i < 0) return -i - 1;
    if (i >= n) return 2 * n - 1 - i;
    return i;
}

std::vector<double> broadcast(const std::vector<double>& v, size_t n, const char* name) {
    if (v.size() == n) return v;
    if (v.size() == 1) return std::vector<double>(n, v[0]);
    throw std::invalid_argument(std::string(name) + ": size does not match image");
}

}  // namespace

Image analytic_gaussian_eps(const std::vector<double>& m, const std::vector<double>& v,
                            const Image& x_t, int t, const NoiseSchedule& schedule) {
    auto mb = broadcast(m, x_t.size(), "analytic_gaussian_eps: m");
    auto vb = broadcast(v, x_t.size(), "analytic_gaussian_eps: v");
    for (double val : vb)
        if (!(val > 0.0)) throw std::invalid_argument("analytic_gaussian_eps: v must be > 0");
    if (t < 1) throw std::out_of_range("analytic_gaussian_eps: t must be >= 1");

    double abar = schedule.alpha_bar(t);
    double sab = std::sqrt(abar);
    double somab = std::sqrt(1.0 - abar);
    Image eps(x_t.height, x_t.width, x_t.channels);
    for (size_t i = 0; i < x_t.size(); ++i) {
        double x = x_t.data[i];
        double e_x0 = mb[i] + sab * vb[i] * (x - sab * mb[i]) / (abar * vb[i] + (1.0 - abar));
        eps.data[i] = (x - sab * e_x0) / somab;
    }
    return eps;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(std::vector<double> m, std::vector<double> v,
                                                   NoiseSchedule schedule)
    : m_(std::move(m)), v_(std::move(v)), schedule_(std::move(schedule)) {
    for (double val : v_)
        if (!(val > 0.0)) throw std::invalid_argument("AnalyticGaussianDenoiser: v must be > 0");
}

Image AnalyticGaussianDenoiser::predict_eps(const Image& x_t, int t) const {
    return analytic_gaussian_eps(m_, v_, x_t, t, schedule_);
}

// ---------------------------------------------------------------------------
// ConvNetT

template <class Real>
ConvNetT<Real>::ConvNetT(std::vector<ConvLayerDesc> layers, uint64_t seed)
    : layers_(std::move(layers)) {
    size_t total = 0;
    for (const auto& l : layers_) {
        layer_offsets_.push_back(total);
        total += static_cast<size_t>(l.out_ch) * l.in_ch * l.ksize * l.ksize + l.out_ch;
    }
    params_.resize(total);

    std::mt19937_64 eng(seed);
    size_t p = 0;
    for (const auto& l : layers_) {
        double a = std::sqrt(1.0 / (static_cast<double>(l.in_ch) * l.ksize * l.ksize));
        size_t nw = static_cast<size_t>(l.out_ch) * l.in_ch * l.ksize * l.ksize;
        for (size_t i = 0; i < nw; ++i) {
            double u = static_cast<double>(eng() >> 11) * (1.0 / 9007199254740992.0);
            params_[p++] = static_cast<Real>((2.0 * u - 1.0) * a);
        }
        for (int i = 0; i < l.out_ch; ++i) params_[p++] = Real(0);
    }
}

template <class Real>
size_t ConvNetT<Real>::parameter_count() const {
    return params_.size();
}

namespace {

// out[x] += c * in[x + shift] with symmetric reflection at the row ends.
template <class Real>
inline void add_shifted_row(Real* out, const Real* in, Real c, int w, int shift) {
    int x0 = shift < 0 ? -shift : 0;
    int x1 = shift > 0 ? w - shift : w;
    for (int x = 0; x < x0; ++x) out[x] += c * in[reflect(x + shift, w)];
    const Real* src = in + shift;
    for (int x = x0; x < x1; ++x) out[x] += c * src[x];
    for (int x = x1; x < w; ++x) out[x] += c * in[reflect(x + shift, w)];
}

// dst[x + shift] += c * src[x] with reflection (adjoint of the above).
template <class Real>
inline void scatter_shifted_row(Real* dst, const Real* src, Real c, int w, int shift) {
    int x0 = shift < 0 ? -shift : 0;
    int x1 = shift > 0 ? w - shift : w;
    for (int x = 0; x < x0; ++x) dst[reflect(x + shift, w)] += c * src[x];
    Real* d = dst + shift;
    for (int x = x0; x < x1; ++x) d[x] += c * src[x];
    for (int x = x1; x < w; ++x) dst[reflect(x + shift, w)] += c * src[x];
}

// sum_x dpre[x] * in[x + shift] with reflection.
template <class Real>
inline Real dot_shifted_row(const Real* dpre, const Real* in, int w, int shift) {
    int x0 = shift < 0 ? -shift : 0;
    int x1 = shift > 0 ? w - shift : w;
    Real acc = Real(0);
    for (int x = 0; x < x0; ++x) acc += dpre[x] * in[reflect(x + shift, w)];
    const Real* src = in + shift;
    for (int x = x0; x < x1; ++x) acc += dpre[x] * src[x];
    for (int x = x1; x < w; ++x) acc += dpre[x] * in[reflect(x + shift, w)];
    return acc;
}

template <class Real>
void conv_forward(const ConvLayerDesc& l, const Real* params, const Real* in, Real* out, int h,
                  int w, bool apply_act) {
    const int k = l.ksize;
    const int pad = k / 2;
    const size_t plane = static_cast<size_t>(h) * w;
    const Real* bias = params + static_cast<size_t>(l.out_ch) * l.in_ch * k * k;

    for (int o = 0; o < l.out_ch; ++o) {
        Real* oplane = out + o * plane;
        for (int y = 0; y < h; ++y) {
            Real* orow = oplane + static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) orow[x] = bias[o];
            for (int i = 0; i < l.in_ch; ++i) {
                const Real* iplane = in + i * plane;
                const Real* wk = params + ((static_cast<size_t>(o) * l.in_ch + i) * k) * k;
                for (int dy = 0; dy < k; ++dy) {
                    const Real* irow = iplane + static_cast<size_t>(reflect(y + dy - pad, h)) * w;
                    for (int dx = 0; dx < k; ++dx)
                        add_shifted_row(orow, irow, wk[dy * k + dx], w, dx - pad);
                }
            }
        }
        if (apply_act)
            for (size_t i = 0; i < plane; ++i)
                oplane[i] = oplane[i] > Real(0) ? oplane[i] : Real(0.1) * oplane[i];
    }
}

}  // namespace

template <class Real>
std::vector<Real> ConvNetT<Real>::forward(const std::vector<Real>& planes, int h, int w) const {
    const size_t plane = static_cast<size_t>(h) * w;
    if (planes.size() != plane * layers_.front().in_ch)
        throw std::invalid_argument("ConvNet: input plane count mismatch");

    std::vector<Real> cur = planes;
    std::vector<Real> next;
    for (size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        next.assign(plane * l.out_ch, Real(0));
        bool last = li + 1 == layers_.size();
        conv_forward(l, params_.data() + layer_offsets_[li], cur.data(), next.data(), h, w, !last);
        cur.swap(next);
    }
    return cur;
}

template <class Real>
Real ConvNetT<Real>::loss_and_grad(const std::vector<Real>& planes, const std::vector<Real>& target,
                                   int h, int w, std::vector<Real>& grad) const {
    const size_t plane = static_cast<size_t>(h) * w;
    grad.resize(params_.size());

    // forward, keeping every layer's output
    std::vector<std::vector<Real>> acts(layers_.size() + 1);
    acts[0] = planes;
    for (size_t li = 0; li < layers_.size(); ++li) {
        const auto& l = layers_[li];
        acts[li + 1].assign(plane * l.out_ch, Real(0));
        bool last = li + 1 == layers_.size();
        conv_forward(l, params_.data() + layer_offsets_[li], acts[li].data(), acts[li + 1].data(),
                     h, w, !last);
    }

    const std::vector<Real>& out = acts.back();
    if (out.size() != target.size())
        throw std::invalid_argument("ConvNet: target plane count mismatch");
    Real loss = Real(0);
    std::vector<Real> dout(out.size());
    Real inv_n = Real(1) / static_cast<Real>(out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        Real d = out[i] - target[i];
        loss += d * d;
        dout[i] = Real(2) * d * inv_n;
    }
    loss *= inv_n;

    // backward
    std::vector<Real> din;
    for (size_t li = layers_.size(); li-- > 0;) {
        const auto& l = layers_[li];
        const int k = l.ksize;
        const int pad = k / 2;
        const Real* wparams = params_.data() + layer_offsets_[li];
        Real* wgrad = grad.data() + layer_offsets_[li];
        Real* bgrad = wgrad + static_cast<size_t>(l.out_ch) * l.in_ch * k * k;
        const std::vector<Real>& in = acts[li];
        const std::vector<Real>& act_out = acts[li + 1];

        // leaky-ReLU derivative for hidden layers (activation preserves sign)
        if (li + 1 != layers_.size())
            for (size_t i = 0; i < dout.size(); ++i)
                dout[i] *= act_out[i] > Real(0) ? Real(1) : Real(0.1);

        din.assign(plane * l.in_ch, Real(0));
        for (int o = 0; o < l.out_ch; ++o) {
            const Real* dplane = dout.data() + o * plane;
            Real bacc = Real(0);
            for (size_t i = 0; i < plane; ++i) bacc += dplane[i];
            bgrad[o] += bacc;

            for (int i = 0; i < l.in_ch; ++i) {
                const Real* iplane = in.data() + i * plane;
                Real* diplane = din.data() + i * plane;
                const Real* wk = wparams + ((static_cast<size_t>(o) * l.in_ch + i) * k) * k;
                Real* wg = wgrad + ((static_cast<size_t>(o) * l.in_ch + i) * k) * k;
                for (int y = 0; y < h; ++y) {
                    const Real* drow = dplane + static_cast<size_t>(y) * w;
                    for (int dy = 0; dy < k; ++dy) {
                        int ry = reflect(y + dy - pad, h);
                        const Real* irow = iplane + static_cast<size_t>(ry) * w;
                        Real* dirow = diplane + static_cast<size_t>(ry) * w;
                        for (int dx = 0; dx < k; ++dx) {
                            wg[dy * k + dx] += dot_shifted_row(drow, irow, w, dx - pad);
                            scatter_shifted_row(dirow, drow, wk[dy * k + dx], w, dx - pad);
                        }
                    }
                }
            }
        }
        dout.swap(din);
    }
    return loss;
}

template class ConvNetT<float>;
template class ConvNetT<double>;

// ---------------------------------------------------------------------------
// ConvNetDenoiser

ConvNetDenoiser::ConvNetDenoiser(ConvNet net, int image_channels, int total_steps)
    : net_(std::move(net)), image_channels_(image_channels), total_steps_(total_steps) {
    if (net_.layers().front().in_ch != image_channels + 1)
        throw std::invalid_argument("ConvNetDenoiser: first layer must take C+1 channels");
    if (net_.layers().back().out_ch != image_channels)
        throw std::invalid_argument("ConvNetDenoiser: last layer must emit C channels");
}

Image ConvNetDenoiser::predict_eps(const Image& x_t, int t) const {
    if (x_t.channels != image_channels_)
        throw std::invalid_argument("ConvNetDenoiser: channel count mismatch");
    if (t < 1 || t > total_steps_)
        throw std::out_of_range("ConvNetDenoiser: time step outside [1, T]");

    const size_t plane = static_cast<size_t>(x_t.height) * x_t.width;
    std::vector<float> planes(plane * (image_channels_ + 1));
    for (int c = 0; c < image_channels_; ++c)
        for (size_t i = 0; i < plane; ++i)
            planes[c * plane + i] = static_cast<float>(x_t.data[i * x_t.channels + c]);
    float tv = static_cast<float>(static_cast<double>(t) / total_steps_);
    std::fill(planes.begin() + image_channels_ * plane, planes.end(), tv);

    std::vector<float> out = net_.forward(planes, x_t.height, x_t.width);
    Image eps(x_t.height, x_t.width, x_t.channels);
    for (int c = 0; c < image_channels_; ++c)
        for (size_t i = 0; i < plane; ++i)
            eps.data[i * x_t.channels + c] = static_cast<double>(out[c * plane + i]);
    return eps;
}

// ---------------------------------------------------------------------------
// Training

std::vector<ConvLayerDesc> default_conv_layers(int image_channels) {
    return {{image_channels + 1, 32, 3}, {32, 32, 3}, {32, 32, 3}, {32, image_channels, 3}};
}

ConvNetDenoiser train_conv_denoiser(const std::vector<Image>& dataset,
                                    const NoiseSchedule& schedule, const TrainConfig& config,
                                    std::ostream* log) {
    if (dataset.empty()) throw std::invalid_argument("train_conv_denoiser: empty dataset");
    if (config.iterations < 0 || config.batch_size < 1 || config.learning_rate <= 0.0 ||
        config.patch < 1)
        throw std::invalid_argument("train_conv_denoiser: invalid config");
    const int C = dataset.front().channels;
    for (const auto& img : dataset) {
        if (img.channels != C)
            throw std::invalid_argument("train_conv_denoiser: mixed channel counts");
        if (img.height < config.patch || img.width < config.patch)
            throw std::invalid_argument("train_conv_denoiser: patch larger than dataset image");
    }

    ConvNetT<float> net(default_conv_layers(C), config.seed);
    GaussianRng rng(mix64(config.seed ^ 0x7261696e5f636e76ULL));

    // Per-sample importance weight for the loss: the reverse step consumes
    // eps_hat scaled by beta_t/(1-abar_t), so per-step prediction error at
    // small t has an outsized effect on the reconstruction. Weighting the
    // per-t loss by that sensitivity (normalized to mean 1 over the schedule)
    // concentrates capacity where the sampler actually spends it.
    std::vector<double> weight(schedule.steps() + 1, 0.0);
    double wsum = 0.0;
    for (int t = 1; t <= schedule.steps(); ++t) {
        weight[t] = schedule.beta(t) / (1.0 - schedule.alpha_bar(t));
        wsum += weight[t];
    }
    for (int t = 1; t <= schedule.steps(); ++t) weight[t] *= schedule.steps() / wsum;

    const int P = config.patch;
    const size_t plane = static_cast<size_t>(P) * P;
    std::vector<float> grad, batch_grad(net.parameter_count());
    std::vector<float> planes(plane * (C + 1)), target(plane * C);

    for (int iter = 0; iter < config.iterations; ++iter) {
        // exponential decay to 1/10 of the initial learning rate
        double lr = config.learning_rate *
                    std::pow(0.1, static_cast<double>(iter) / config.iterations);
        std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
        double batch_loss = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const Image& img = dataset[rng.next_u64() % dataset.size()];
            int y0 = img.height == P ? 0 : static_cast<int>(rng.next_u64() % (img.height - P + 1));
            int x0 = img.width == P ? 0 : static_cast<int>(rng.next_u64() % (img.width - P + 1));
            int t = 1 + static_cast<int>(rng.next_u64() % schedule.steps());
            double sab = std::sqrt(schedule.alpha_bar(t));
            double somab = std::sqrt(1.0 - schedule.alpha_bar(t));

            for (int c = 0; c < C; ++c)
                for (int y = 0; y < P; ++y)
                    for (int x = 0; x < P; ++x)
                        planes[c * plane + static_cast<size_t>(y) * P + x] =
                            img.at(y0 + y, x0 + x, c);
            // noise and diffuse in-place
            for (int c = 0; c < C; ++c)
                for (size_t i = 0; i < plane; ++i) {
                    double e = rng.gaussian();
                    target[c * plane + i] = e;
                    planes[c * plane + i] = sab * planes[c * plane + i] + somab * e;
                }
            std::fill(planes.begin() + C * plane, planes.end(),
                      static_cast<double>(t) / schedule.steps());

            grad.assign(net.parameter_count(), 0.0);
            double loss = net.loss_and_grad(planes, target, P, P, grad);
            if (!std::isfinite(loss)) throw std::runtime_error("train_conv_denoiser: loss diverged");
            batch_loss += weight[t] * loss;
            for (size_t i = 0; i < batch_grad.size(); ++i) batch_grad[i] += weight[t] * grad[i];
        }
        double scale = lr / config.batch_size;
        auto& p = net.parameters();
        for (size_t i = 0; i < p.size(); ++i) p[i] -= scale * batch_grad[i];

        if (log && config.log_interval > 0 &&
            ((iter + 1) % config.log_interval == 0 || iter + 1 == config.iterations))
            (*log) << "iter " << (iter + 1) << "/" << config.iterations << "  loss "
                   << batch_loss / config.batch_size << "\n";
    }

    ConvNet runtime(default_conv_layers(C), config.seed);
    auto& fp = runtime.parameters();
    const auto& dp = net.parameters();
    for (size_t i = 0; i < fp.size(); ++i) fp[i] = static_cast<float>(dp[i]);
    return ConvNetDenoiser(std::move(runtime), C, schedule.steps());
}

// ---------------------------------------------------------------------------
// Serialization

void save_denoiser(const ConvNetDenoiser& denoiser, const std::string& path) {
    nlohmann::json header;
    header["channels"] = denoiser.image_channels();
    header["T"] = denoiser.total_steps();
    header["activation"] = "leaky_relu_0.1";
    auto layers = nlohmann::json::array();
    for (const auto& l : denoiser.net().layers())
        layers.push_back({{"in", l.in_ch}, {"out", l.out_ch}, {"k", l.ksize}});
    header["layers"] = layers;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_denoiser: cannot open " + path);
    f << "CFDN1" << header.dump() << "\n";
    const auto& p = denoiser.net().parameters();
    static_assert(sizeof(float) == 4);
    f.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * 4));
    if (!f) throw std::runtime_error("save_denoiser: write failed for " + path);
}

ConvNetDenoiser load_denoiser(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_denoiser: cannot open " + path);
    char magic[5];
    f.read(magic, 5);
    if (!f || std::memcmp(magic, "CFDN1", 5) != 0)
        throw std::runtime_error("load_denoiser: bad magic in " + path);
    std::string header_line;
    std::getline(f, header_line);
    nlohmann::json header = nlohmann::json::parse(header_line);

    std::vector<ConvLayerDesc> layers;
    for (const auto& l : header.at("layers"))
        layers.push_back({l.at("in").get<int>(), l.at("out").get<int>(), l.at("k").get<int>()});

    ConvNet net(layers, 0);
    auto& p = net.parameters();
    f.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * 4));
    if (!f) throw std::runtime_error("load_denoiser: truncated weights in " + path);
    return ConvNetDenoiser(std::move(net), header.at("channels").get<int>(),
                           header.at("T").get<int>());
}

}  // namespace cfdiff
