#include "mobifair/model.hpp"
#include "mobifair/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mobifair {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'B', 'I', 'F', 'A', 'I', 'R'};
constexpr std::uint32_t kVersion = 1;

void check_context(const ModelSpec& spec, std::span<const int> context) {
    if (context.size() != static_cast<std::size_t>(spec.window))
        throw data_error("model: context length does not match window");
    for (int c : context)
        if (c < 0 || c >= spec.num_cells) throw data_error("model: cell id out of vocabulary");
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

template <typename T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(bytes[offset + i]) << (8 * i);
    return v;
}

} // namespace

GlobalModel GlobalModel::zeros(ModelSpec spec) {
    GlobalModel m;
    m.spec = spec;
    m.params.assign(spec.param_count(), 0.0);
    return m;
}

std::vector<double> logits(const ModelSpec& spec, std::span<const double> params,
                           std::span<const int> context) {
    check_context(spec, context);
    const int v = spec.num_cells;
    const std::size_t bias_row = static_cast<std::size_t>(spec.window) * v;

    std::vector<double> z(params.begin() + bias_row * v, params.begin() + (bias_row + 1) * v);
    for (int t = 0; t < spec.window; ++t) {
        const std::size_t row = static_cast<std::size_t>(t) * v + context[t];
        const double* w = params.data() + row * v;
        for (int c = 0; c < v; ++c) z[c] += w[c];
    }
    return z;
}

std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.size());
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

int predict(const ModelSpec& spec, std::span<const double> params,
            std::span<const int> context) {
    const auto z = logits(spec, params, context);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double mean_loss(const ModelSpec& spec, std::span<const double> params,
                 std::span<const Example> examples, std::vector<double>* grad_out) {
    if (examples.empty()) throw data_error("mean_loss: no examples");
    const int v = spec.num_cells;
    const std::size_t bias_row = static_cast<std::size_t>(spec.window) * v;
    const double inv_n = 1.0 / static_cast<double>(examples.size());

    if (grad_out) grad_out->assign(params.size(), 0.0);

    double loss = 0.0;
    for (const Example& ex : examples) {
        if (ex.label < 0 || ex.label >= v) throw data_error("mean_loss: label out of vocabulary");
        const auto z = logits(spec, params, ex.context);
        const auto p = softmax(z);
        loss -= std::log(std::max(p[ex.label], 1e-300));

        if (grad_out) {
            // d loss / d w[row][c] = (p_c - 1{c==label}) for each active row
            for (int c = 0; c < v; ++c) {
                const double g = (p[c] - (c == ex.label ? 1.0 : 0.0)) * inv_n;
                (*grad_out)[bias_row * v + c] += g;
                for (int t = 0; t < spec.window; ++t) {
                    const std::size_t row = static_cast<std::size_t>(t) * v + ex.context[t];
                    (*grad_out)[row * v + c] += g;
                }
            }
        }
    }
    return loss * inv_n;
}

double accuracy(const ModelSpec& spec, std::span<const double> params,
                std::span<const Example> examples) {
    if (examples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const Example& ex : examples)
        if (predict(spec, params, ex.context) == ex.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

std::vector<std::uint8_t> serialize_model(const GlobalModel& m) {
    std::vector<std::uint8_t> out;
    out.reserve(32 + m.params.size() * 8);
    for (char c : kMagic) out.push_back(static_cast<std::uint8_t>(c));
    append_le(out, kVersion);
    append_le(out, static_cast<std::uint32_t>(m.spec.num_cells));
    append_le(out, static_cast<std::uint32_t>(m.spec.window));
    append_le(out, static_cast<std::uint64_t>(m.params.size()));
    for (double d : m.params) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        append_le(out, bits);
    }
    return out;
}

GlobalModel deserialize_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 28 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw data_error("model file: bad magic");
    const auto version = read_le<std::uint32_t>(bytes, 8);
    if (version != kVersion) throw data_error("model file: unsupported version");

    GlobalModel m;
    m.spec.num_cells = static_cast<int>(read_le<std::uint32_t>(bytes, 12));
    m.spec.window = static_cast<int>(read_le<std::uint32_t>(bytes, 16));
    const auto count = read_le<std::uint64_t>(bytes, 20);
    if (count != m.spec.param_count() || bytes.size() != 28 + count * 8)
        throw data_error("model file: size mismatch");

    m.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto bits = read_le<std::uint64_t>(bytes, 28 + i * 8);
        std::memcpy(&m.params[i], &bits, 8);
    }
    return m;
}

} // namespace mobifair
