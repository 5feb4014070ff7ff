#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <json.hpp>

#include "dslob/dataset.hpp"

namespace dslob {

class BenchError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kInputs = kWindow * kFeatures;  // 4000

inline double rmse(std::span<const double> preds, std::span<const double> truths) {
  if (preds.size() != truths.size()) throw BenchError("rmse: length mismatch");
  if (preds.empty()) throw BenchError("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += (preds[i] - truths[i]) * (preds[i] - truths[i]);
  return std::sqrt(s / static_cast<double>(preds.size()));
}

// ---------------------------------------------------------------------------
// Models

struct Persistence {
  std::string name() const { return "persistence"; }
  nlohmann::json params() const { return nlohmann::json::object(); }
  double operator()(const WindowSample& w) const { return w.last_mid(); }
};

inline double predict_persistence(const WindowSample& w) { return w.last_mid(); }

/// y_hat = weights[0..4000) . flat(window) + weights[4000].
struct LinearModel {
  std::vector<double> weights = std::vector<double>(kInputs + 1, 0.0);
  double lambda{1.0};

  double bias() const { return weights.back(); }
  std::string name() const { return "ridge"; }
  nlohmann::json params() const { return nlohmann::json{{"lambda", lambda}}; }
  double operator()(const WindowSample& w) const {
    const auto x = w.flat();
    return Eigen::Map<const Eigen::VectorXd>(x.data(), kInputs).dot(
               Eigen::Map<const Eigen::VectorXd>(weights.data(), kInputs)) +
           bias();
  }
};

template <class P>
concept Predictor = requires(const P& p, const WindowSample& w) {
  { p(w) } -> std::convertible_to<double>;
  { p.name() } -> std::convertible_to<std::string>;
  { p.params() } -> std::convertible_to<nlohmann::json>;
};

namespace detail {

// Windows shorter than this are accumulated directly instead of through
// the lag recurrence.
inline constexpr std::size_t kDirectRun = 200;

struct Run {
  const DayFeatures* day;
  std::size_t first_end;
  std::vector<double> y;
};

// Groups windows into runs of consecutive end indices on the same day, in a
// deterministic order (day index, then end).
inline std::vector<Run> window_runs(std::span<const WindowSample> windows) {
  std::vector<const WindowSample*> order;
  order.reserve(windows.size());
  for (const auto& w : windows) order.push_back(&w);
  std::sort(order.begin(), order.end(), [](const WindowSample* a, const WindowSample* b) {
    if (a->day_index != b->day_index) return a->day_index < b->day_index;
    if (a->day != b->day) return std::less<>{}(a->day, b->day);
    return a->end < b->end;
  });
  std::vector<Run> runs;
  for (const WindowSample* w : order) {
    if (runs.empty() || runs.back().day != w->day || runs.back().first_end + runs.back().y.size() != w->end) {
      runs.push_back(Run{w->day, w->end, {}});
    }
    runs.back().y.push_back(w->y);
  }
  return runs;
}

struct Moments {
  Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(kInputs, kInputs);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kInputs);
  Eigen::VectorXd xy = Eigen::VectorXd::Zero(kInputs);
  double y{0.0};
  double n{0.0};
};

using Records = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kFeatures), Eigen::RowMajor>;

/// Adds the sums of x x^T, x, x y, y of one run. The Gram matrix has 100 x
/// 100 blocks of 40 x 40; block (i, i+k) summed over the run's m windows is
/// sum_t r_{s+i+t} r_{s+i+k+t}^T for t < m, which moves from i to i+1 by
/// dropping one outer product and adding one.
inline void accumulate_run(const Run& run, Moments& acc) {
  const std::size_t m = run.y.size();
  const std::size_t s = run.first_end + 1 - kWindow;
  const Eigen::Map<const Eigen::VectorXd> y(run.y.data(), static_cast<Eigen::Index>(m));
  const auto rows = static_cast<Eigen::Index>(m + kWindow - 1);
  const Eigen::Map<const Records> R(run.day->x.data() + s * kFeatures, rows, kFeatures);
  const auto F = static_cast<Eigen::Index>(kFeatures);
  const auto M = static_cast<Eigen::Index>(m);

  if (m < kDirectRun) {
    using Strided = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
                               Eigen::OuterStride<>>;
    const Strided B(R.data(), M, static_cast<Eigen::Index>(kInputs), Eigen::OuterStride<>(F));
    acc.xx.noalias() += B.transpose() * B;
    acc.x.noalias() += B.transpose() * Eigen::VectorXd::Ones(M);
    acc.xy.noalias() += B.transpose() * y;
  } else {
    Eigen::Matrix<double, kFeatures, kFeatures> blk;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kWindow); ++k) {
      blk.noalias() = R.middleRows(0, M).transpose() * R.middleRows(k, M);
      for (Eigen::Index i = 0; i + k < static_cast<Eigen::Index>(kWindow); ++i) {
        if (i > 0) {
          blk.noalias() -= R.row(i - 1).transpose() * R.row(i - 1 + k);
          blk.noalias() += R.row(i - 1 + M).transpose() * R.row(i - 1 + M + k);
        }
        acc.xx.block(i * F, (i + k) * F, F, F) += blk;
        if (k > 0) acc.xx.block((i + k) * F, i * F, F, F) += blk.transpose();
      }
    }
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(kWindow); ++i) {
      acc.x.segment(i * F, F) += R.middleRows(i, M).colwise().sum().transpose();
      acc.xy.segment(i * F, F).noalias() += R.middleRows(i, M).transpose() * y;
    }
  }
  acc.y += y.sum();
  acc.n += static_cast<double>(m);
}

}  // namespace detail

/// Minimizes mean((y - w.x - b)^2) + lambda |w|^2 over the training windows;
/// the bias is not penalized. The centred normal equations are solved by
/// Cholesky. lambda = 0 with a singular design is an error.
inline LinearModel fit_ridge(std::span<const WindowSample> train, double lambda) {
  if (train.empty()) throw BenchError("fit_ridge: no training samples");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw BenchError("fit_ridge: lambda must be finite and >= 0");
  detail::Moments acc;
  for (const auto& run : detail::window_runs(train)) detail::accumulate_run(run, acc);

  const Eigen::VectorXd mu = acc.x / acc.n;
  const double y_mean = acc.y / acc.n;
  Eigen::MatrixXd A = acc.xx / acc.n;
  A.noalias() -= mu * mu.transpose();
  A.diagonal().array() += lambda;
  Eigen::VectorXd rhs = acc.xy / acc.n - mu * y_mean;

  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success || (lambda == 0.0 && llt.rcond() < 1e-12)) {
    throw BenchError("fit_ridge: design matrix is rank deficient; use lambda > 0");
  }
  const Eigen::VectorXd w = llt.solve(rhs);
  if (!w.allFinite()) throw BenchError("fit_ridge: non-finite weights");

  LinearModel model;
  model.lambda = lambda;
  std::copy(w.data(), w.data() + kInputs, model.weights.begin());
  model.weights.back() = y_mean - mu.dot(w);
  return model;
}

inline double ridge_objective(const LinearModel& model, std::span<const WindowSample> windows) {
  double s = 0.0;
  for (const auto& w : windows) {
    const double r = w.y - model(w);
    s += r * r;
  }
  const Eigen::Map<const Eigen::VectorXd> wt(model.weights.data(), kInputs);
  return s / static_cast<double>(windows.size()) + model.lambda * wt.squaredNorm();
}

/// Predictions in window order; the work is split across threads but each
/// value only depends on its own window.
template <Predictor P>
std::vector<double> predict_all(const P& model, std::span<const WindowSample> windows, unsigned parallel = 1) {
  std::vector<double> out(windows.size());
  const auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = model(windows[i]);
  };
  const unsigned n = std::max(1U, std::min<unsigned>(parallel, static_cast<unsigned>(windows.size() / 1024 + 1)));
  if (n == 1) {
    work(0, windows.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (windows.size() + n - 1) / n;
    for (unsigned t = 0; t < n; ++t) {
      pool.emplace_back(work, std::min(windows.size(), t * chunk), std::min(windows.size(), (t + 1) * chunk));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct SplitScore {
  double rmse{0.0};
  std::size_t count{0};
};

struct DayScore {
  std::int64_t day_index{0};
  Scenario scenario{Scenario::ordinary};
  std::optional<SimTime> t_s;
  std::size_t n_pre{0};
  double sse_pre{0.0};
  std::size_t n_post{0};
  double sse_post{0.0};
};

struct EvalReport {
  std::string model;
  nlohmann::json params = nlohmann::json::object();
  std::string domain{"normalized"};
  std::size_t horizon{0};
  std::uint64_t seed{0};
  std::string config_fingerprint;
  std::size_t train_count{0};
  SplitScore iid;
  SplitScore small;
  SplitScore large;
  std::vector<DayScore> per_day;  // shock days only

  double rmse_iid() const { return iid.rmse; }
  double rmse_small() const { return small.rmse; }
  double rmse_large() const { return large.rmse; }
};

inline constexpr const char* kReportColumns[] = {"IID", "Small Shock", "Large Shock"};

template <Predictor P>
EvalReport evaluate(const P& model, const Dataset& ds, unsigned parallel = 1) {
  const Splits& s = ds.splits;
  if (s.train.empty() || s.test_iid.empty() || s.test_small.empty() || s.test_large.empty()) {
    throw BenchError("evaluate: empty split");
  }
  EvalReport rep;
  rep.model = model.name();
  rep.params = model.params();
  rep.domain = ds.normalized ? "normalized" : "raw";
  rep.horizon = ds.horizon;
  rep.seed = ds.manifest.root_seed;
  rep.config_fingerprint = ds.manifest.config_fingerprint;
  rep.train_count = s.train.size();

  std::map<std::int64_t, DayScore> days;
  const auto score = [&](const std::vector<WindowSample>& windows) {
    const auto preds = predict_all(model, windows, parallel);
    std::vector<double> truth(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      truth[i] = windows[i].y;
      const auto& w = windows[i];
      if (w.scenario == Scenario::ordinary) continue;
      DayScore& d = days[w.day_index];
      d.day_index = w.day_index;
      d.scenario = w.scenario;
      d.t_s = w.day->t_s;
      const double e2 = (preds[i] - w.y) * (preds[i] - w.y);
      if (w.regime == Regime::post_shock) {
        ++d.n_post;
        d.sse_post += e2;
      } else {
        ++d.n_pre;
        d.sse_pre += e2;
      }
    }
    return SplitScore{rmse(preds, truth), windows.size()};
  };
  rep.iid = score(s.test_iid);
  rep.small = score(s.test_small);
  rep.large = score(s.test_large);
  for (auto& [_, d] : days) rep.per_day.push_back(d);
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  return json{{"format", "dslob-eval-report"},
              {"version", 1},
              {"domain", r.domain},
              {"horizon", r.horizon},
              {"seed", r.seed},
              {"config_fingerprint", r.config_fingerprint},
              {"columns", kReportColumns},
              {"counts",
               {{"train", r.train_count},
                {"test_iid", r.iid.count},
                {"test_small", r.small.count},
                {"test_large", r.large.count}}},
              {"rows",
               json::array({json{{"model", r.model},
                                 {"params", r.params},
                                 {"n_seeds", 1},
                                 {"rmse", {{"iid", r.iid.rmse}, {"small", r.small.rmse}, {"large", r.large.rmse}}},
                                 {"rmse_std", nullptr}}})}};
}

/// Structural check of a report against the shared schema
/// (schemas/eval_report.schema.json). Throws BenchError naming the first problem.
inline void validate_report(const nlohmann::json& j) {
  const auto fail = [](const std::string& what) { throw BenchError("invalid report: " + what); };
  if (!j.is_object()) fail("not an object");
  if (j.value("format", "") != "dslob-eval-report") fail("format");
  if (!j.contains("version") || j["version"] != 1) fail("version");
  if (!j.contains("domain") || (j["domain"] != "normalized" && j["domain"] != "raw")) fail("domain");
  for (const char* k : {"horizon", "seed"}) {
    if (!j.contains(k) || !j[k].is_number_integer() || j[k].get<std::int64_t>() < 0) fail(k);
  }
  if (!j.contains("config_fingerprint") || !j["config_fingerprint"].is_string()) fail("config_fingerprint");
  if (j.value("columns", nlohmann::json()) != nlohmann::json(kReportColumns)) fail("columns");
  if (!j.contains("counts") || !j["counts"].is_object()) fail("counts");
  for (const char* k : {"train", "test_iid", "test_small", "test_large"}) {
    if (!j["counts"].contains(k) || !j["counts"][k].is_number_integer() || j["counts"][k].get<std::int64_t>() <= 0) {
      fail(std::string("counts.") + k);
    }
  }
  if (!j.contains("rows") || !j["rows"].is_array() || j["rows"].empty()) fail("rows");
  for (const auto& row : j["rows"]) {
    if (!row.contains("model") || !row["model"].is_string()) fail("rows[].model");
    if (!row.contains("params") || !row["params"].is_object()) fail("rows[].params");
    if (!row.contains("n_seeds") || !row["n_seeds"].is_number_integer() || row["n_seeds"].get<int>() < 1) {
      fail("rows[].n_seeds");
    }
    for (const char* field : {"rmse", "rmse_std"}) {
      if (!row.contains(field)) fail(std::string("rows[].") + field);
      const auto& v = row[field];
      if (v.is_null() && std::string(field) == "rmse_std") continue;
      if (!v.is_object()) fail(std::string("rows[].") + field);
      for (const char* k : {"iid", "small", "large"}) {
        if (!v.contains(k) || !v[k].is_number() || !(v[k].get<double>() >= 0.0) || !std::isfinite(v[k].get<double>())) {
          fail(std::string("rows[].") + field + "." + k);
        }
      }
    }
  }
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// The report as a text table with the IID / Small Shock / Large Shock columns.
inline std::string render_table(const EvalReport& r) {
  std::string out = "| Model | IID | Small Shock | Large Shock |\n|---|---|---|---|\n";
  out += "| " + r.model + " | " + detail::fmt_fixed(r.iid.rmse, 4) + " | " + detail::fmt_fixed(r.small.rmse, 4) +
         " | " + detail::fmt_fixed(r.large.rmse, 4) + " |\n";
  out += "\nRMSE on " + r.domain + " mid, horizon " + std::to_string(r.horizon) + " records; samples: train " +
         std::to_string(r.train_count) + ", iid " + std::to_string(r.iid.count) + ", small " +
         std::to_string(r.small.count) + ", large " + std::to_string(r.large.count) + "\n";
  return out;
}

// Per shock day: RMSE before and after the shock.
inline std::string per_day_csv(const EvalReport& r) {
  std::string out = "day_index,scenario,t_s,n_pre,rmse_pre,n_post,rmse_post\n";
  for (const auto& d : r.per_day) {
    out += std::to_string(d.day_index) + ',' + std::string(to_string(d.scenario)) + ',' +
           (d.t_s ? std::to_string(*d.t_s) : std::string()) + ',' + std::to_string(d.n_pre) + ',' +
           (d.n_pre ? detail::fmt_double(std::sqrt(d.sse_pre / static_cast<double>(d.n_pre))) : std::string()) + ',' +
           std::to_string(d.n_post) + ',' +
           (d.n_post ? detail::fmt_double(std::sqrt(d.sse_post / static_cast<double>(d.n_post))) : std::string()) +
           '\n';
  }
  return out;
}

}  // namespace dslob
