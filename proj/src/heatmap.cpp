#include "mobifair/heatmap.hpp"
#include "mobifair/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mobifair {

namespace {

double ssim_window(const Heatmap& x, const Heatmap& y, int r0, int c0, int n,
                   double c1, double c2) {
    const double inv_np = 1.0 / (static_cast<double>(n) * n);

    double sum_x = 0.0, sum_y = 0.0;
    for (int r = r0; r < r0 + n; ++r)
        for (int c = c0; c < c0 + n; ++c) {
            sum_x += x.at(r, c);
            sum_y += y.at(r, c);
        }
    const double mu_x = sum_x * inv_np;
    const double mu_y = sum_y * inv_np;

    double var_x = 0.0, var_y = 0.0, cov = 0.0;
    for (int r = r0; r < r0 + n; ++r)
        for (int c = c0; c < c0 + n; ++c) {
            const double dx = x.at(r, c) - mu_x;
            const double dy = y.at(r, c) - mu_y;
            var_x += dx * dx;
            var_y += dy * dy;
            cov += dx * dy;
        }
    var_x *= inv_np;
    var_y *= inv_np;
    cov *= inv_np;

    const double num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
    const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
    return num / den;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

} // namespace

double SimilarityMatrix::mean_off_diagonal() const {
    const std::size_t n = user_ids.size();
    if (n < 2) throw data_error("mean_off_diagonal: need at least 2 users");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            sum += at(i, j);
            ++count;
        }
    return sum / static_cast<double>(count);
}

FrequencyMatrix build_fm(const CellSequence& seq, const Grid& grid) {
    FrequencyMatrix fm;
    fm.rows = grid.rows();
    fm.cols = grid.cols();
    fm.counts.assign(static_cast<std::size_t>(fm.rows) * fm.cols, 0);
    for (const auto& [ts, cell] : seq.cells) {
        if (cell.row < 0 || cell.row >= fm.rows || cell.col < 0 || cell.col >= fm.cols)
            throw data_error("build_fm: cell outside grid for user " + seq.user_id);
        fm.at(cell.row, cell.col) += 1;
    }
    return fm;
}

Heatmap normalize_fm(const FrequencyMatrix& fm) {
    Heatmap h;
    h.rows = fm.rows;
    h.cols = fm.cols;
    h.v.assign(fm.counts.size(), 0.0);

    const std::int64_t m = *std::max_element(fm.counts.begin(), fm.counts.end());
    if (m == 0) return h;
    if (m == 1) {
        for (std::size_t i = 0; i < fm.counts.size(); ++i)
            h.v[i] = fm.counts[i] > 0 ? 1.0 : 0.0;
        return h;
    }
    const double log_m = std::log(static_cast<double>(m));
    for (std::size_t i = 0; i < fm.counts.size(); ++i)
        if (fm.counts[i] > 0)
            h.v[i] = std::log(static_cast<double>(fm.counts[i])) / log_m;
    return h;
}

double ssim(const Heatmap& x, const Heatmap& y, const SsimParams& p) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw data_error("ssim: image dimensions differ");
    const int n = p.window;
    if (n < 1) throw config_error("ssim: window must be >= 1");
    if (x.rows < n || x.cols < n) {
        std::ostringstream os;
        os << "ssim: image " << x.rows << "x" << x.cols << " smaller than window " << n << "x"
           << n << "; use a smaller window";
        throw data_error(os.str());
    }

    const double c1 = p.c1(), c2 = p.c2();
    double sum = 0.0;
    std::int64_t windows = 0;
    for (int r = 0; r + n <= x.rows; ++r)
        for (int c = 0; c + n <= x.cols; ++c) {
            sum += ssim_window(x, y, r, c, n, c1, c2);
            ++windows;
        }
    return sum / static_cast<double>(windows);
}

namespace {

SimilarityMatrix ssim_matrix_impl(const std::map<std::string, Heatmap>& heatmaps,
                                  const SsimParams& p, bool parallel) {
    if (heatmaps.size() < 2) throw data_error("ssim_matrix: need at least 2 users");

    SimilarityMatrix sm;
    std::vector<const Heatmap*> maps;
    for (const auto& [id, h] : heatmaps) {
        sm.user_ids.push_back(id);
        maps.push_back(&h);
    }
    const std::size_t n = maps.size();
    for (std::size_t i = 1; i < n; ++i)
        if (maps[i]->rows != maps[0]->rows || maps[i]->cols != maps[0]->cols)
            throw data_error("ssim_matrix: heatmap dimensions differ across users");

    sm.values.assign(n * n, 1.0);

    struct Pair {
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});

    // every pair writes only its own two mirrored slots, so thread scheduling
    // cannot change the result; exceptions must not escape the parallel region
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        try {
            const auto [i, j] = pairs[k];
            const double v = ssim(*maps[i], *maps[j], p);
            sm.values[i * n + j] = v;
            sm.values[j * n + i] = v;
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return sm;
}

} // namespace

SimilarityMatrix ssim_matrix(const std::map<std::string, Heatmap>& heatmaps,
                             const SsimParams& p) {
    return ssim_matrix_impl(heatmaps, p, true);
}

SimilarityMatrix ssim_matrix_serial(const std::map<std::string, Heatmap>& heatmaps,
                                    const SsimParams& p) {
    return ssim_matrix_impl(heatmaps, p, false);
}

std::string to_pgm(const Heatmap& h) {
    std::ostringstream os;
    os << "P2\n" << h.cols << " " << h.rows << "\n255\n";
    for (int r = 0; r < h.rows; ++r) {
        for (int c = 0; c < h.cols; ++c) {
            if (c > 0) os << ' ';
            os << std::lround(h.at(r, c) * 255.0);
        }
        os << '\n';
    }
    return os.str();
}

std::string similarity_to_csv(const SimilarityMatrix& sm) {
    std::ostringstream os;
    os << "user_id";
    for (const auto& id : sm.user_ids) os << ',' << id;
    os << '\n';
    char buf[32];
    const std::size_t n = sm.user_ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        os << sm.user_ids[i];
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", sm.at(i, j));
            os << ',' << buf;
        }
        os << '\n';
    }
    return os.str();
}

SimilarityMatrix similarity_from_csv(std::string_view csv) {
    SimilarityMatrix sm;
    std::vector<std::string_view> lines;
    for (auto line : split(csv, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw data_error("similarity csv: empty file");

    auto header = split(lines[0], ',');
    if (header.size() < 3 || header[0] != "user_id")
        throw data_error("similarity csv: malformed header");
    sm.user_ids.assign(header.begin() + 1, header.end());

    const std::size_t n = sm.user_ids.size();
    if (lines.size() != n + 1) throw data_error("similarity csv: row count mismatch");
    sm.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto fields = split(lines[i + 1], ',');
        if (fields.size() != n + 1 || fields[0] != sm.user_ids[i])
            throw data_error("similarity csv: row " + std::to_string(i + 2) + " malformed");
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            auto f = fields[j + 1];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size())
                throw data_error("similarity csv: bad value at row " + std::to_string(i + 2));
            sm.values[i * n + j] = v;
        }
    }
    return sm;
}

} // namespace mobifair
