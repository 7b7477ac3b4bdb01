#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ewpf/tensor.hpp"

namespace ewpf {

// Hourly wind-power series. Timestamps are unix seconds, strictly increasing;
// has_gaps flags spacing other than exactly one hour.
struct TimeSeries {
    std::vector<int64_t> timestamps;
    std::vector<double> values;  // watts
    bool has_gaps = false;

    size_t size() const { return values.size(); }
};

// CSV with header `timestamp,power`, ISO-8601 timestamps, decimal watts.
TimeSeries load_csv(const std::string& path);
void save_csv(const std::string& path, const TimeSeries& ts);

int64_t parse_iso8601(const std::string& s);  // throws DataError
std::string format_iso8601(int64_t unix_seconds);

// Affine map of [min, max] (from the training split only) onto [-1, +1].
struct Scaler {
    double min = 0.0;
    double max = 1.0;

    double transform(double x) const { return 2.0 * (x - min) / (max - min) - 1.0; }
    double inverse(double y) const { return (y + 1.0) * 0.5 * (max - min) + min; }
};

Scaler fit_minmax(std::span<const double> train_values);  // throws DataError on constant input
std::vector<double> normalize(const Scaler& s, std::span<const double> xs);
std::vector<double> denormalize(const Scaler& s, std::span<const double> ys);

// Chronological split: train gets the first floor(frac * T) points. min_len
// (typically seq_len + horizon) is validated on both sides when nonzero.
std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& ts, double train_frac = 0.70,
                                                   size_t min_len = 0);

// Rolling windows over one normalized series: sample k covers inputs
// [origin, origin+L) and targets [origin+L, origin+L+m). Windows never cross
// the series boundary, so train/test sets are windowed separately.
class WindowedDataset {
public:
    WindowedDataset(std::vector<double> series, int seq_len, int horizon, int stride);

    size_t size() const { return origins_.size(); }
    int seq_len() const { return seq_len_; }
    int horizon() const { return horizon_; }
    int stride() const { return stride_; }
    int origin(size_t k) const { return origins_[k]; }

    Tensor input(size_t k) const;   // [L x 1] constant tensor
    Tensor target(size_t k) const;  // [m x 1] constant tensor
    double target_value(size_t k, int step) const;

    const std::vector<double>& series() const { return series_; }

private:
    std::vector<double> series_;
    std::vector<int> origins_;
    int seq_len_;
    int horizon_;
    int stride_;
};

WindowedDataset make_windows(std::vector<double> normalized, int seq_len, int horizon,
                             int stride = 1);

// Deterministic stand-in series. Profiles:
//   "sine"          1 + sin(2 pi t / 24), values in [0, 2]
//   "diurnal-noise" 24 h sinusoid + slow regime drift + bounded noise, clipped >= 0
TimeSeries synthesize_series(int n, uint64_t seed, const std::string& profile);

}  // namespace ewpf
