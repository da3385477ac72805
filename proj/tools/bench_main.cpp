#include "mobifair/flsim.hpp"
#include "mobifair/heatmap.hpp"
#include "mobifair/profile.hpp"
#include "mobifair/rng.hpp"
#include "mobifair/synthgen.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

// Times the OpenMP kernels against their serial reference implementations on
// a synthetic workload and checks that both produce identical results.

namespace {

using mobifair::rng::Engine;

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-24s serial %8.1f ms   parallel %8.1f ms   speedup %.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "identical" : "MISMATCH");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n\n");
#endif

    // --- pairwise SSIM over a synthetic population --------------------------
    mobifair::PopulationSpec spec;
    spec.grid = {47.6, -122.3, 6.0, 6.0, 0.1};
    spec.days = 365;
    spec.seed = 7;
    spec.groups = {{"west", 16, {0, 0, 30, 30}, 0.6, 8},
                   {"east", 16, {30, 30, 30, 30}, 0.6, 8}};
    const auto pop = mobifair::generate_population(spec);

    std::map<std::string, mobifair::Heatmap> heatmaps;
    for (const auto& [id, daily] : pop.daily) {
        mobifair::CellSequence seq;
        seq.user_id = id;
        for (const auto& [day, cell] : daily.days) seq.cells.emplace_back(day * 86400, cell);
        heatmaps[id] = mobifair::normalize_fm(mobifair::build_fm(seq, spec.grid));
    }

    mobifair::SsimParams params;
    mobifair::SimilarityMatrix sm_serial, sm_parallel;
    const double ssim_serial_ms =
        time_ms([&] { sm_serial = mobifair::ssim_matrix_serial(heatmaps, params); });
    const double ssim_parallel_ms =
        time_ms([&] { sm_parallel = mobifair::ssim_matrix(heatmaps, params); });
    report("ssim_matrix (32 users)", ssim_serial_ms, ssim_parallel_ms,
           sm_serial.values == sm_parallel.values);

    // --- match-length entropy on a long sequence ----------------------------
    Engine eng(41);
    std::vector<int> symbols(20000);
    for (int& s : symbols) s = static_cast<int>(eng.below(4));

    mobifair::EntropyEstimate e_serial{}, e_parallel{};
    const double lz_serial_ms = time_ms([&] { e_serial = mobifair::lz_entropy_serial(symbols); });
    const double lz_parallel_ms = time_ms([&] { e_parallel = mobifair::lz_entropy(symbols); });
    report("lz_entropy (n=20000)", lz_serial_ms, lz_parallel_ms,
           e_serial.value_bits == e_parallel.value_bits);

    // --- one round of local training across all clients ---------------------
    // coarser grid here: the model's parameter count grows with the square of
    // the cell vocabulary
    mobifair::PopulationSpec train_spec = spec;
    train_spec.grid.cell_size_miles = 0.5; // 12x12 cells
    train_spec.groups = {{"west", 16, {0, 0, 12, 6}, 0.6, 8},
                         {"east", 16, {0, 6, 12, 6}, 0.6, 8}};
    const auto train_pop = mobifair::generate_population(train_spec);

    std::map<std::string, mobifair::ClientDataset> datasets;
    std::vector<std::string> ids;
    for (const auto& [id, daily] : train_pop.daily) {
        auto ds = mobifair::build_client_dataset(daily, train_spec.grid, 2, 0.2);
        if (ds.eligible) {
            datasets[id] = std::move(ds);
            ids.push_back(id);
        }
    }
    const mobifair::ModelSpec mspec{train_spec.grid.rows() * train_spec.grid.cols(), 2};
    const auto model = mobifair::GlobalModel::zeros(mspec);

    std::vector<mobifair::ClientUpdate> up_serial, up_parallel;
    const double train_serial_ms = time_ms(
        [&] { up_serial = mobifair::train_clients(model, datasets, ids, 2, 0.5, 7, 0, false); });
    const double train_parallel_ms = time_ms(
        [&] { up_parallel = mobifair::train_clients(model, datasets, ids, 2, 0.5, 7, 0, true); });
    bool identical = up_serial.size() == up_parallel.size();
    for (std::size_t i = 0; identical && i < up_serial.size(); ++i)
        identical = up_serial[i].new_params == up_parallel[i].new_params &&
                    up_serial[i].train_loss == up_parallel[i].train_loss;
    report("train_clients (1 round)", train_serial_ms, train_parallel_ms, identical);

    return 0;
}
