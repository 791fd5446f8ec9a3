#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "rhsim/errors.hpp"
#include "rhsim/pricing.hpp"

namespace rhsim {

void BermudanRequest::validate() const {
  if (!(strike > 0.0)) throw ConfigError("bermudan: strike must be positive");
  if (!(maturity > 0.0)) throw ConfigError("bermudan: maturity must be positive");
  if (exercise_dates == 0) throw ConfigError("bermudan: at least one exercise date is required");
  if (steps == 0 || steps % exercise_dates != 0) {
    std::ostringstream msg;
    msg << "bermudan: steps (" << steps << ") must be a positive multiple of the exercise count ("
        << exercise_dates << ")";
    throw ConfigError(msg.str());
  }
  if (degree < 0) throw ConfigError("bermudan: degree must be non-negative");
  if (stream.points_per_shift < 2 || stream.points_per_shift % 2 != 0) {
    throw ConfigError("bermudan: points per shift must be even (regression and pricing halves)");
  }
}

namespace {

struct ExerciseGrid {
  std::vector<std::size_t> steps;  // step index of each exercise date
  std::vector<double> growth;      // e^{r t_j}
  std::vector<double> discount;    // e^{-r t_j}
};

ExerciseGrid make_grid(const BermudanRequest& req, double r) {
  ExerciseGrid g;
  const std::size_t stride = req.steps / req.exercise_dates;
  for (std::size_t j = 1; j <= req.exercise_dates; ++j) {
    const double t = req.maturity * static_cast<double>(j) / static_cast<double>(req.exercise_dates);
    g.steps.push_back(j * stride);
    g.growth.push_back(std::exp(r * t));
    g.discount.push_back(std::exp(-r * t));
  }
  return g;
}

// Stores (S, V) at every exercise date for the regression paths.
class RecordObserver final : public PathObserver {
 public:
  RecordObserver(const ExerciseGrid& grid, std::size_t first, std::size_t width,
                 std::vector<double>& store)
      : grid_(grid), first_(first), width_(width), store_(store) {}

  void begin_path(std::size_t index, const MarketState&) override {
    row_ = (index - first_) * grid_.steps.size() * width_;
    next_ = 0;
  }
  void after_step(std::size_t step, const MarketState& state) override {
    if (next_ >= grid_.steps.size() || step != grid_.steps[next_]) return;
    double* slot = store_.data() + row_ + next_ * width_;
    slot[0] = state.S * grid_.growth[next_];
    std::copy_n(state.V.begin(), width_ - 1, slot + 1);
    ++next_;
  }
  void end_path(std::span<double>) override {}

 private:
  const ExerciseGrid& grid_;
  std::size_t first_;
  std::size_t width_;
  std::vector<double>& store_;
  std::size_t row_ = 0;
  std::size_t next_ = 0;
};

struct StoppingRule {
  // Coefficients on (1, features) for every exercise date but the last.
  std::vector<Eigen::VectorXd> beta;
};

class ExerciseObserver final : public PathObserver {
 public:
  ExerciseObserver(const ExerciseGrid& grid, const StoppingRule& rule, const FeatureBasis& basis,
                   const KernelApprox& kernel, double K, double V0)
      : grid_(grid),
        rule_(rule),
        basis_(basis),
        kernel_(kernel),
        K_(K),
        V0_(V0),
        vars_(basis.variables()),
        features_(basis.size()) {}

  void begin_path(std::size_t, const MarketState&) override {
    next_ = 0;
    exercised_ = false;
    payoff_ = 0.0;
    european_ = 0.0;
  }
  void after_step(std::size_t step, const MarketState& state) override {
    if (next_ >= grid_.steps.size() || step != grid_.steps[next_]) return;
    const std::size_t j = next_++;
    const bool last = j + 1 == grid_.steps.size();
    const double S = state.S * grid_.growth[j];
    const double intrinsic = K_ - S;
    if (last) european_ = grid_.discount[j] * std::max(intrinsic, 0.0);
    if (exercised_ || !(intrinsic > 0.0)) return;
    bool exercise = last;
    if (!last) {
      bermudan_variables(S, state.V, K_, kernel_, V0_, vars_);
      basis_.evaluate(vars_, features_);
      const Eigen::VectorXd& b = rule_.beta[j];
      double continuation = b[0];
      for (std::size_t f = 0; f < features_.size(); ++f) continuation += b[f + 1] * features_[f];
      exercise = intrinsic >= continuation;
    }
    if (exercise) {
      exercised_ = true;
      payoff_ = grid_.discount[j] * intrinsic;
    }
  }
  void end_path(std::span<double> payoffs) override {
    payoffs[0] = payoff_;
    payoffs[1] = european_;
  }

 private:
  const ExerciseGrid& grid_;
  const StoppingRule& rule_;
  const FeatureBasis& basis_;
  const KernelApprox& kernel_;
  double K_;
  double V0_;
  std::vector<double> vars_;
  std::vector<double> features_;
  std::size_t next_ = 0;
  bool exercised_ = false;
  double payoff_ = 0.0;
  double european_ = 0.0;
};

// Backward induction on stored states. Returns the in-sample value.
double fit_stopping_rule(const std::vector<double>& store, std::size_t paths, std::size_t width,
                         const ExerciseGrid& grid, const FeatureBasis& basis,
                         const KernelApprox& kernel, double K, double V0, StoppingRule& rule) {
  const std::size_t dates = grid.steps.size();
  const std::size_t cols = basis.size() + 1;
  auto at = [&](std::size_t p, std::size_t j) { return store.data() + (p * dates + j) * width; };

  std::vector<double> cash(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    cash[p] = grid.discount[dates - 1] * std::max(K - at(p, dates - 1)[0], 0.0);
  }
  rule.beta.assign(dates > 0 ? dates - 1 : 0, Eigen::VectorXd::Zero(cols));
  std::vector<double> vars(basis.variables());
  std::vector<double> features(basis.size());
  std::vector<std::size_t> itm;
  for (std::size_t j = dates - 1; j-- > 0;) {
    itm.clear();
    for (std::size_t p = 0; p < paths; ++p) {
      if (K - at(p, j)[0] > 0.0) itm.push_back(p);
    }
    if (itm.empty()) continue;
    Eigen::MatrixXd X(itm.size(), cols);
    Eigen::VectorXd y(itm.size());
    for (std::size_t r = 0; r < itm.size(); ++r) {
      const double* s = at(itm[r], j);
      bermudan_variables(s[0], std::span<const double>(s + 1, width - 1), K, kernel, V0, vars);
      basis.evaluate(vars, features);
      X(r, 0) = 1.0;
      for (std::size_t f = 0; f < features.size(); ++f) X(r, f + 1) = features[f];
      y[r] = cash[itm[r]] / grid.discount[j];
    }
    // Column equilibration keeps the rank threshold meaningful for the
    // high-order monomials.
    Eigen::VectorXd scale = X.cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index c = 0; c < scale.size(); ++c) {
      if (!(scale[c] > 0.0)) scale[c] = 1.0;
    }
    X = X * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.rows(), X.cols());
    qr.setThreshold(1e-10);
    qr.compute(X);
    Eigen::VectorXd beta = qr.solve(y).cwiseQuotient(scale);
    if (!beta.allFinite()) throw NumericalError("bermudan: regression produced non-finite values");
    const Eigen::VectorXd continuation = X * qr.solve(y);
    for (std::size_t r = 0; r < itm.size(); ++r) {
      const double intrinsic = K - at(itm[r], j)[0];
      if (intrinsic >= continuation[static_cast<Eigen::Index>(r)]) {
        cash[itm[r]] = grid.discount[j] * intrinsic;
      }
    }
    rule.beta[j] = std::move(beta);
  }
  double sum = 0.0;
  for (double c : cash) sum += c;
  return sum / static_cast<double>(paths);
}

}  // namespace

BermudanResult price_bermudan_put(const BermudanRequest& req, const ModelParams& model,
                                  const KernelApprox& kernel) {
  req.validate();
  SimulationSetup setup;
  setup.model = model;
  setup.model.T = req.maturity;
  setup.kernel = kernel;
  setup.scheme = req.scheme;
  setup.steps = req.steps;
  setup.stream = req.stream;
  setup.threads = req.threads;

  const ExerciseGrid grid = make_grid(req, model.r);
  const FeatureBasis basis(kernel.size(), req.degree);
  const std::size_t width = kernel.size() + 1;
  const std::size_t pps = req.stream.points_per_shift;
  const std::size_t half = pps / 2;
  std::vector<double> store(half * grid.steps.size() * width);

  std::vector<double> bermudan_means, european_means, in_sample_means;
  BermudanResult out;
  out.features = basis.size();
  for (std::size_t shift = 0; shift < req.stream.shifts; ++shift) {
    const std::size_t first = shift * pps;
    const SimulationResult fit = simulate(
        setup, 0, [&] { return std::make_unique<RecordObserver>(grid, first, width, store); },
        first, first + half);
    StoppingRule rule;
    in_sample_means.push_back(
        fit_stopping_rule(store, half, width, grid, basis, kernel, req.strike, model.V0, rule));

    const SimulationResult priced = simulate(
        setup, 2,
        [&] {
          return std::make_unique<ExerciseObserver>(grid, rule, basis, kernel, req.strike,
                                                    model.V0);
        },
        first + half, first + pps);
    bermudan_means.push_back(replicate_means(priced.replicates, 0).at(0));
    european_means.push_back(replicate_means(priced.replicates, 1).at(0));
    out.counters += fit.counters;
    out.counters += priced.counters;
    out.seconds += fit.seconds + priced.seconds;
  }
  out.price = estimate_from_replicates(bermudan_means);
  out.european = estimate_from_replicates(european_means);
  out.in_sample = estimate_from_replicates(in_sample_means);
  return out;
}

}  // namespace rhsim
