#ifndef SYMREG_EXPERIMENTS_BATCH_HPP
#define SYMREG_EXPERIMENTS_BATCH_HPP

#include "symreg/baselines.hpp"
#include "symreg/bnb.hpp"
#include "symreg/experiments/score.hpp"
#include "symreg/experiments/trial.hpp"
#include "symreg/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace symreg::experiments {

enum class Method { kJoint, kRegisterOnly, kTwoStage };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kJoint: return "joint";
    case Method::kRegisterOnly: return "register-only";
    case Method::kTwoStage: return "two-stage";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  for (Method m : {Method::kJoint, Method::kRegisterOnly, Method::kTwoStage}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

struct BatchConfig {
  SolveConfig solve;
  RansacConfig ransac;
  ViewConfig view;           // 3D trials only
  bool record_time = false;  // wall time breaks byte-identical reruns
  std::size_t threads = 0;   // 0: SYMREG_THREADS, else hardware concurrency
};

struct TrialRow {
  std::size_t id = 0;
  int dim = 2;
  std::string shape;
  double requested_overlap = 0.0;
  double overlap = 0.0;  // measured
  double outlier_fraction = 0.0;
  Method method = Method::kJoint;
  TrialScore score;
  double energy = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  double seconds = 0.0;
  std::string error;  // nonempty when the trial failed

  bool ok() const { return error.empty(); }
};

/// Thread count from the config, then SYMREG_THREADS, then the hardware.
inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SYMREG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <int D>
Trial<D> make_trial(const TrialSpec& spec, const ViewConfig& view = {}) {
  if constexpr (D == 2) {
    return make_2d_trial(spec);
  } else {
    return make_3d_trial(spec, view);
  }
}

/// Runs one method on an already generated trial.
template <int D>
TrialRow run_method(const Trial<D>& trial, Method method,
                    const BatchConfig& cfg) {
  TrialRow row;
  row.dim = D;
  row.shape = trial.shape;
  row.overlap = trial.overlap;
  row.method = method;
  const auto start = std::chrono::steady_clock::now();
  switch (method) {
    case Method::kJoint: {
      SolveConfig sc = cfg.solve;
      sc.mode = SolveMode::kJoint;
      const auto r = solve(trial.model, trial.data, sc);
      row.score = score<D>(r.pose, r.plane, trial.truth);
      row.energy = r.energy;
      row.certified = r.certified;
      break;
    }
    case Method::kRegisterOnly: {
      const auto r = register_only(trial.model, trial.data, cfg.solve);
      row.score = score<D>(r.pose, std::nullopt, trial.truth);
      row.energy = r.energy;
      row.certified = r.certified;
      break;
    }
    case Method::kTwoStage: {
      const auto r =
          register_then_detect(trial.model, trial.data, cfg.solve, cfg.ransac);
      row.score = score<D>(r.registration.pose, r.symmetry.plane, trial.truth);
      row.energy = r.registration.energy;
      row.certified = r.registration.certified;
      break;
    }
  }
  row.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return row;
}

/// Rows ordered by trial index, then by method order. A trial that fails to
/// generate or solve yields rows carrying the error message.
template <int D>
std::vector<TrialRow> run_batch(const std::vector<TrialSpec>& specs,
                                const std::vector<Method>& methods,
                                const BatchConfig& cfg = {}) {
  if (methods.empty()) throw std::invalid_argument("no methods given");
  std::vector<TrialRow> rows(specs.size() * methods.size());

  auto run_one = [&](std::size_t i) {
    const TrialSpec& spec = specs[i];
    auto fill = [&](TrialRow& row, std::size_t m) {
      row.id = i;
      row.dim = D;
      row.requested_overlap = spec.overlap;
      row.outlier_fraction = spec.outlier_fraction;
      row.method = methods[m];
    };
    try {
      const Trial<D> trial = make_trial<D>(spec, cfg.view);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        TrialRow& row = rows[i * methods.size() + m];
        try {
          row = run_method(trial, methods[m], cfg);
        } catch (const std::exception& e) {
          row.shape = trial.shape;
          row.overlap = trial.overlap;
          row.error = e.what();
        }
        fill(row, m);
      }
    } catch (const std::exception& e) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        TrialRow& row = rows[i * methods.size() + m];
        row.error = e.what();
        fill(row, m);
      }
    }
  };

  const std::size_t threads =
      std::min(resolve_threads(cfg.threads), std::max<std::size_t>(specs.size(), 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < specs.size(); i = next++) run_one(i);
    });
  }
  pool.clear();  // joins
  return rows;
}

//==============================================================================
// Aggregation

/// Median of the non-NaN values; NaN when there are none.
inline double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  return n ? sum / static_cast<double>(n)
           : std::numeric_limits<double>::quiet_NaN();
}

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
};

struct BucketSummary {
  Method method = Method::kJoint;
  double overlap = 0.0;  // requested overlap of the bucket
  double outlier_fraction = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::size_t uncertified = 0;
  double success_rate = 0.0;  // over completed trials
  ErrorSummary rotation_deg;
  ErrorSummary translation;
  ErrorSummary normal_deg;
  ErrorSummary depth;
};

inline ErrorSummary summarize(const std::vector<double>& v) {
  return {mean(v), median(v)};
}

/// One summary per (method, requested overlap, outlier fraction), sorted by
/// that key.
inline std::vector<BucketSummary> summarize(const std::vector<TrialRow>& rows) {
  using Key = std::tuple<int, double, double>;
  std::map<Key, std::vector<const TrialRow*>> groups;
  for (const auto& r : rows) {
    groups[{static_cast<int>(r.method), r.requested_overlap,
            r.outlier_fraction}]
        .push_back(&r);
  }
  std::vector<BucketSummary> out;
  for (const auto& [key, members] : groups) {
    BucketSummary b;
    b.method = static_cast<Method>(std::get<0>(key));
    b.overlap = std::get<1>(key);
    b.outlier_fraction = std::get<2>(key);
    b.trials = members.size();
    std::vector<double> rot, tr, nrm, dep;
    std::size_t successes = 0;
    for (const TrialRow* r : members) {
      if (!r->ok()) {
        ++b.failures;
        continue;
      }
      if (!r->certified) ++b.uncertified;
      if (r->score.success) ++successes;
      rot.push_back(r->score.rotation_deg);
      tr.push_back(r->score.translation);
      nrm.push_back(r->score.normal_deg);
      dep.push_back(r->score.depth);
    }
    const std::size_t done = b.trials - b.failures;
    b.success_rate =
        done ? static_cast<double>(successes) / static_cast<double>(done) : 0.0;
    b.rotation_deg = summarize(rot);
    b.translation = summarize(tr);
    b.normal_deg = summarize(nrm);
    b.depth = summarize(dep);
    out.push_back(b);
  }
  return out;
}

//==============================================================================
// Output

namespace detail {

inline std::string csv_number(double v) {
  return std::isnan(v) ? std::string("nan") : io::format_double(v);
}

/// Quotes a free-text field and doubles embedded quotes.
inline std::string csv_text(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + '"';
}

}  // namespace detail

inline void write_rows(std::ostream& out, const std::vector<TrialRow>& rows,
                       bool with_time = false) {
  out << "trial,dim,shape,requested_overlap,overlap,outlier_fraction,method,"
         "rotation_deg,translation,normal_deg,depth,energy,certified,success";
  if (with_time) out << ",seconds";
  out << ",error\n";
  using detail::csv_number;
  for (const auto& r : rows) {
    out << r.id << ',' << r.dim << ',' << r.shape << ','
        << csv_number(r.requested_overlap) << ',' << csv_number(r.overlap)
        << ',' << csv_number(r.outlier_fraction) << ',' << to_string(r.method)
        << ',';
    if (r.ok()) {
      out << csv_number(r.score.rotation_deg) << ','
          << csv_number(r.score.translation) << ','
          << csv_number(r.score.normal_deg) << ',' << csv_number(r.score.depth)
          << ',' << csv_number(r.energy) << ',' << (r.certified ? 1 : 0)
          << ',' << (r.score.success ? 1 : 0);
    } else {
      out << "nan,nan,nan,nan,nan,0,0";
    }
    if (with_time) out << ',' << csv_number(r.seconds);
    out << ',' << (r.ok() ? std::string() : detail::csv_text(r.error)) << '\n';
  }
}

/// Per-bucket mean and median errors, one row per bucket.
inline void write_summary(std::ostream& out,
                          const std::vector<BucketSummary>& buckets) {
  out << "method,overlap,outlier_fraction,trials,failures,uncertified,"
         "success_rate,rotation_mean,rotation_median,translation_mean,"
         "translation_median,normal_mean,normal_median,depth_mean,"
         "depth_median\n";
  using detail::csv_number;
  for (const auto& b : buckets) {
    out << to_string(b.method) << ',' << csv_number(b.overlap) << ','
        << csv_number(b.outlier_fraction) << ',' << b.trials << ','
        << b.failures << ',' << b.uncertified << ','
        << csv_number(b.success_rate) << ','
        << csv_number(b.rotation_deg.mean) << ','
        << csv_number(b.rotation_deg.median) << ','
        << csv_number(b.translation.mean) << ','
        << csv_number(b.translation.median) << ','
        << csv_number(b.normal_deg.mean) << ','
        << csv_number(b.normal_deg.median) << ','
        << csv_number(b.depth.mean) << ',' << csv_number(b.depth.median)
        << '\n';
  }
}

/// Specs for `count` trials at one overlap; shapes cycle through the library
/// and seeds run from `first_seed`.
inline std::vector<TrialSpec> protocol_specs(std::size_t count, double overlap,
                                             double outlier_fraction = 0.0,
                                             std::uint64_t first_seed = 1) {
  std::vector<TrialSpec> specs(count);
  for (std::size_t i = 0; i < count; ++i) {
    specs[i].shape = i;
    specs[i].overlap = overlap;
    specs[i].outlier_fraction = outlier_fraction;
    specs[i].seed = first_seed + i;
  }
  return specs;
}

}  // namespace symreg::experiments

#endif  // SYMREG_EXPERIMENTS_BATCH_HPP
