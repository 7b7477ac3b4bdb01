#include "ewpf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ewpf/rng.hpp"

namespace ewpf {

namespace {

constexpr int64_t kHour = 3600;
// 2020-01-01T00:00:00Z, start of synthetic series
constexpr int64_t kSynthEpoch = 1577836800;

// days since 1970-01-01 for a civil date (proleptic Gregorian)
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe + era * 400);
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

}  // namespace

int64_t parse_iso8601(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char tz[4] = {0};
    int fields = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%1s", &y, &mo, &d, &h, &mi, &sec,
                             tz);
    if (fields < 5) {
        // also accept a space separator
        fields = std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%1s", &y, &mo, &d, &h, &mi, &sec,
                             tz);
    }
    if (fields < 5 || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
        throw DataError("invalid ISO-8601 timestamp: " + s);
    }
    if (tz[0] != '\0' && tz[0] != 'Z') {
        throw DataError("unsupported timestamp suffix in: " + s);
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_iso8601(int64_t unix_seconds) {
    int64_t days = unix_seconds / 86400;
    int64_t rem = unix_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

TimeSeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,power") {
        throw DataError(path + ": expected header 'timestamp,power', got '" + line + "'");
    }
    TimeSeries ts;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'timestamp,power'");
        }
        int64_t t;
        try {
            t = parse_iso8601(line.substr(0, comma));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string value_text = line.substr(comma + 1);
        double v;
        try {
            size_t pos = 0;
            v = std::stod(value_text, &pos);
            while (pos < value_text.size() &&
                   (value_text[pos] == ' ' || value_text[pos] == '\t'))
                ++pos;
            if (pos != value_text.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": invalid power value '" +
                            value_text + "'");
        }
        if (!std::isfinite(v)) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-finite power value");
        }
        if (!ts.timestamps.empty()) {
            if (t <= ts.timestamps.back()) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": timestamps must be strictly increasing");
            }
            if (t - ts.timestamps.back() != kHour) ts.has_gaps = true;
        }
        ts.timestamps.push_back(t);
        ts.values.push_back(v);
    }
    if (ts.values.empty()) throw DataError(path + ": no data rows");
    return ts;
}

void save_csv(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "timestamp,power\n";
    char buf[64];
    for (size_t i = 0; i < ts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g", ts.values[i]);
        out << format_iso8601(ts.timestamps[i]) << ',' << buf << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

Scaler fit_minmax(std::span<const double> train_values) {
    if (train_values.empty()) throw DataError("fit_minmax: empty input");
    double lo = train_values[0], hi = train_values[0];
    for (double v : train_values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) {
        throw DataError("fit_minmax: constant series (min == max == " + std::to_string(lo) +
                        "), scaling undefined");
    }
    return Scaler{lo, hi};
}

std::vector<double> normalize(const Scaler& s, std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = s.transform(xs[i]);
    return out;
}

std::vector<double> denormalize(const Scaler& s, std::span<const double> ys) {
    std::vector<double> out(ys.size());
    for (size_t i = 0; i < ys.size(); ++i) out[i] = s.inverse(ys[i]);
    return out;
}

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& ts, double train_frac,
                                                   size_t min_len) {
    if (train_frac <= 0.0 || train_frac >= 1.0) {
        throw ConfigError("train fraction must be in (0, 1), got " + std::to_string(train_frac));
    }
    const size_t n_train = static_cast<size_t>(std::floor(train_frac * ts.size()));
    const size_t n_test = ts.size() - n_train;
    if (min_len > 0 && (n_train < min_len || n_test < min_len)) {
        throw DataError("split " + std::to_string(n_train) + "/" + std::to_string(n_test) +
                        " leaves a side shorter than required length " + std::to_string(min_len));
    }
    TimeSeries train, test;
    train.timestamps.assign(ts.timestamps.begin(), ts.timestamps.begin() + n_train);
    train.values.assign(ts.values.begin(), ts.values.begin() + n_train);
    train.has_gaps = ts.has_gaps;
    test.timestamps.assign(ts.timestamps.begin() + n_train, ts.timestamps.end());
    test.values.assign(ts.values.begin() + n_train, ts.values.end());
    test.has_gaps = ts.has_gaps;
    return {std::move(train), std::move(test)};
}

WindowedDataset::WindowedDataset(std::vector<double> series, int seq_len, int horizon, int stride)
    : series_(std::move(series)), seq_len_(seq_len), horizon_(horizon), stride_(stride) {
    if (seq_len_ < 1 || horizon_ < 1 || stride_ < 1) {
        throw ConfigError("windowing needs seq_len, horizon and stride all >= 1");
    }
    const int t = static_cast<int>(series_.size());
    if (t < seq_len_ + horizon_) {
        throw DataError("series of length " + std::to_string(t) + " is shorter than seq_len+horizon = " +
                        std::to_string(seq_len_ + horizon_));
    }
    for (int k = 0; k + seq_len_ + horizon_ <= t; k += stride_) origins_.push_back(k);
}

Tensor WindowedDataset::input(size_t k) const {
    const int o = origins_[k];
    std::vector<double> xs(series_.begin() + o, series_.begin() + o + seq_len_);
    return Tensor::from_vector({seq_len_, 1}, std::move(xs));
}

Tensor WindowedDataset::target(size_t k) const {
    const int o = origins_[k] + seq_len_;
    std::vector<double> ys(series_.begin() + o, series_.begin() + o + horizon_);
    return Tensor::from_vector({horizon_, 1}, std::move(ys));
}

double WindowedDataset::target_value(size_t k, int step) const {
    return series_[static_cast<size_t>(origins_[k] + seq_len_ + step)];
}

WindowedDataset make_windows(std::vector<double> normalized, int seq_len, int horizon,
                             int stride) {
    return WindowedDataset(std::move(normalized), seq_len, horizon, stride);
}

TimeSeries synthesize_series(int n, uint64_t seed, const std::string& profile) {
    if (n < 1) throw ConfigError("synthesize_series: n must be >= 1");
    TimeSeries ts;
    ts.timestamps.reserve(static_cast<size_t>(n));
    ts.values.reserve(static_cast<size_t>(n));
    Rng rng(seed);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (int t = 0; t < n; ++t) {
        double v;
        if (profile == "sine") {
            v = 1.0 + std::sin(two_pi * t / 24.0);
        } else if (profile == "diurnal-noise") {
            const double daily = 2.5 * std::sin(two_pi * t / 24.0);
            const double drift = 1.5 * std::sin(two_pi * t / 168.0 + 1.0);  // weekly regime
            const double noise = 0.8 * (2.0 * rng.uniform() - 1.0);
            v = std::max(0.0, 4.0 + daily + drift + noise);  // power is nonnegative
        } else {
            throw ConfigError("unknown synthetic profile: " + profile +
                              " (expected sine|diurnal-noise)");
        }
        ts.timestamps.push_back(kSynthEpoch + t * kHour);
        ts.values.push_back(v);
    }
    return ts;
}

}  // namespace ewpf
