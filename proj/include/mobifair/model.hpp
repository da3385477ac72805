#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mobifair {

// Next-location predictor: multinomial logistic regression over one-hot
// encodings of the W context cells. Cells are flat grid indices in [0, V).
// Parameter layout is row-major (W*V + 1) x V; row W*V is the bias.
struct ModelSpec {
    int num_cells = 0; // V
    int window = 0;    // W

    std::size_t param_count() const {
        return (static_cast<std::size_t>(window) * num_cells + 1) * num_cells;
    }
    bool operator==(const ModelSpec&) const = default;
};

struct GlobalModel {
    ModelSpec spec;
    std::vector<double> params; // all zeros initially

    static GlobalModel zeros(ModelSpec spec);
};

struct Example {
    std::vector<int> context; // W cell ids, oldest first
    int label = 0;            // next cell id
};

// Class scores for one context; probabilities via stable softmax.
std::vector<double> logits(const ModelSpec& spec, std::span<const double> params,
                           std::span<const int> context);
std::vector<double> softmax(std::span<const double> z);

// Argmax class, lowest index on ties.
int predict(const ModelSpec& spec, std::span<const double> params,
            std::span<const int> context);

// Mean cross-entropy over the examples; grad (same layout as params) is
// accumulated into grad_out when non-null.
double mean_loss(const ModelSpec& spec, std::span<const double> params,
                 std::span<const Example> examples, std::vector<double>* grad_out = nullptr);

// Fraction of examples whose argmax prediction matches the label.
double accuracy(const ModelSpec& spec, std::span<const double> params,
                std::span<const Example> examples);

// model.bin: magic + version header, then little-endian doubles.
std::vector<std::uint8_t> serialize_model(const GlobalModel& m);
GlobalModel deserialize_model(std::span<const std::uint8_t> bytes);

} // namespace mobifair
