#include "uocad/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uocad/error.hpp"
#include "uocad/rng.hpp"
#include "uocad/text.hpp"

namespace uocad::tuner {

namespace {

template <typename T>
void check_dimension(const std::vector<T>& v, const char* name) {
  if (v.empty()) throw ConfigError(std::string("search space dimension '") + name + "' is empty");
}

template <typename T>
bool has(const std::vector<T>& v, const T& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

// floor(log_eta(R)) in integers, immune to floating rounding at exact powers.
int floor_log(int r, int eta) {
  int s = 0;
  long long p = eta;
  while (p <= r) {
    ++s;
    p *= eta;
  }
  return s;
}

long long ipow(int base, int e) {
  long long p = 1;
  for (int i = 0; i < e; ++i) p *= base;
  return p;
}

std::uint64_t seed_for(std::uint64_t seed, int bracket, int rung, std::size_t slot) {
  return derive_seed(seed, 2, static_cast<std::uint64_t>(bracket), static_cast<std::uint64_t>(rung), slot);
}

}  // namespace

void SearchSpace::validate() const {
  check_dimension(units, "units");
  check_dimension(activations, "activation");
  check_dimension(learning_rates, "learning_rate");
  check_dimension(optimizers, "optimizer");
  check_dimension(num_layers, "num_layers");
  check_dimension(dropouts, "dropout");
  for (std::size_t i = 0; i < cardinality(); ++i) config_at(i).validate();
}

std::size_t SearchSpace::cardinality() const {
  return units.size() * activations.size() * learning_rates.size() * optimizers.size() * num_layers.size() *
         dropouts.size();
}

bool SearchSpace::contains(const nn::HyperConfig& cfg) const {
  return has(units, cfg.units) && has(activations, cfg.activation) && has(learning_rates, cfg.learning_rate) &&
         has(optimizers, cfg.optimizer) && has(num_layers, cfg.num_layers) && has(dropouts, cfg.dropout);
}

nn::HyperConfig SearchSpace::config_at(std::size_t index) const {
  if (index >= cardinality()) throw BoundsError("config index " + std::to_string(index) + " out of range");
  nn::HyperConfig cfg;
  auto take = [&index](const auto& dim) {
    const auto& v = dim[index % dim.size()];
    index /= dim.size();
    return v;
  };
  cfg.units = take(units);
  cfg.activation = take(activations);
  cfg.learning_rate = take(learning_rates);
  cfg.optimizer = take(optimizers);
  cfg.num_layers = take(num_layers);
  cfg.dropout = take(dropouts);
  return cfg;
}

SearchSpace parse_search_space(std::string_view content) {
  SearchSpace space;
  for (const auto& [key, value] : text::parse_key_values(content)) {
    const auto items = text::split(value, ',');
    auto each = [&](auto parse) {
      std::vector<decltype(parse(std::string_view{}))> out;
      for (auto item : items) {
        item = text::trim(item);
        if (!item.empty()) out.push_back(parse(item));
      }
      return out;
    };
    try {
      if (key == "units") {
        space.units = each([](std::string_view s) { return static_cast<int>(text::parse_int(s)); });
      } else if (key == "activation") {
        space.activations = each([](std::string_view s) { return nn::parse_activation(s); });
      } else if (key == "learning_rate") {
        space.learning_rates = each([](std::string_view s) { return text::parse_double(s); });
      } else if (key == "optimizer") {
        space.optimizers = each([](std::string_view s) { return nn::parse_optimizer(s); });
      } else if (key == "num_layers") {
        space.num_layers = each([](std::string_view s) { return static_cast<int>(text::parse_int(s)); });
      } else if (key == "dropout") {
        space.dropouts = each([](std::string_view s) { return text::parse_double(s); });
      } else {
        throw ConfigError("unknown search space key '" + key + "'");
      }
    } catch (const SchemaError& e) {
      throw ConfigError(e.what());
    }
  }
  space.validate();
  return space;
}

nn::HyperConfig sample_config(const SearchSpace& space, std::uint64_t seed, std::uint64_t draw_index) {
  Rng rng(derive_seed(seed, 1, draw_index));
  return space.config_at(rng.index(space.cardinality()));
}

std::vector<BracketPlan> hyperband_schedule(int max_epochs, int eta) {
  if (max_epochs < 1) throw ConfigError("max epochs R must be at least 1");
  if (eta < 2) throw ConfigError("eta must be at least 2");
  const int s_max = floor_log(max_epochs, eta);
  std::vector<BracketPlan> plan;
  for (int s = s_max; s >= 0; --s) {
    const long long scale = ipow(eta, s);
    const auto n0 = static_cast<std::size_t>((static_cast<long long>(s_max + 1) * scale + s) / (s + 1));
    const long long r0 = std::max<long long>(1, max_epochs / scale);
    BracketPlan b{s, {}};
    for (int i = 0; i <= s; ++i) {
      const long long factor = ipow(eta, i);
      b.rungs.push_back({n0 / static_cast<std::size_t>(factor),
                         static_cast<int>(std::min<long long>(max_epochs, r0 * factor))});
    }
    plan.push_back(std::move(b));
  }
  return plan;
}

std::size_t total_trials(std::span<const BracketPlan> plan) {
  std::size_t total = 0;
  for (const auto& b : plan) {
    for (const auto& r : b.rungs) total += r.n_configs;
  }
  return total;
}

std::string TrialResult::status_string() const {
  switch (status) {
    case TrialStatus::completed: return "completed";
    case TrialStatus::retried: return "retried(" + std::to_string(retries) + ")";
    case TrialStatus::failed: return "failed";
  }
  return "failed";
}

TrialResult run_trial(const nn::HyperConfig& cfg, std::span<const nn::Sample> train_set,
                      std::span<const nn::Sample> val_set, int epochs, std::uint64_t seed,
                      const TrainFn& train_fn) {
  if (epochs < 1) throw ConfigError("a trial needs at least one epoch");
  TrialResult r;
  r.config = cfg;
  r.epochs_granted = epochs;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    const nn::TrainOptions options{epochs, kTrialBatchSize, kTrialPatience, 1e-6,
                                   attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt))};
    try {
      const auto result = train_fn ? train_fn(cfg, train_set, val_set, options)
                                   : nn::train(cfg, train_set, val_set, options);
      r.val_loss = result.report.final_val_loss;
      r.retries = attempt;
      r.status = attempt == 0 ? TrialStatus::completed : TrialStatus::retried;
      return r;
    } catch (const DivergenceError&) {
    }
  }
  r.retries = kMaxRetries;
  r.status = TrialStatus::failed;
  return r;
}

std::vector<std::size_t> promote(std::span<const TrialResult> trials, int eta) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].val_loss) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *trials[a].val_loss < *trials[b].val_loss; });
  order.resize(std::min(order.size(), trials.size() / static_cast<std::size_t>(eta)));
  return order;
}

TuneResult tune(const SearchSpace& space, std::span<const nn::Sample> samples, const TuneOptions& options) {
  space.validate();
  if (samples.size() < 2) throw EmptyInputError("tuning needs at least 2 samples");
  auto n_val = static_cast<std::size_t>(std::ceil(options.val_fraction * static_cast<double>(samples.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, samples.size() - 1);
  const auto train_set = samples.first(samples.size() - n_val);
  const auto val_set = samples.last(n_val);

  TuneResult result;
  std::uint64_t draws = 0;
  for (const auto& bracket : hyperband_schedule(options.max_epochs, options.eta)) {
    std::vector<nn::HyperConfig> configs;
    for (std::size_t j = 0; j < bracket.rungs.front().n_configs; ++j) {
      configs.push_back(sample_config(space, options.seed, draws++));
    }
    for (std::size_t i = 0; i < bracket.rungs.size() && !configs.empty(); ++i) {
      const int epochs = bracket.rungs[i].epochs;
      std::vector<TrialResult> rung;
      for (std::size_t j = 0; j < configs.size(); ++j) {
        auto t = run_trial(configs[j], train_set, val_set, epochs,
                           seed_for(options.seed, bracket.s, static_cast<int>(i), j), options.train_fn);
        t.trial_id = result.log.size() + rung.size();
        t.bracket = bracket.s;
        t.rung = static_cast<int>(i);
        rung.push_back(std::move(t));
      }
      std::vector<nn::HyperConfig> next;
      for (const std::size_t k : promote(rung, options.eta)) next.push_back(rung[k].config);
      result.log.insert(result.log.end(), rung.begin(), rung.end());
      configs = std::move(next);
    }
  }

  const TrialResult* best = nullptr;
  for (const auto& t : result.log) {
    if (!t.val_loss) continue;
    if (best == nullptr || *t.val_loss < *best->val_loss ||
        (*t.val_loss == *best->val_loss &&
         (t.epochs_granted < best->epochs_granted ||
          (t.epochs_granted == best->epochs_granted && t.config < best->config)))) {
      best = &t;
    }
  }
  if (best == nullptr) throw TuningFailedError("every tuning trial failed");
  result.best = best->config;
  result.best_val_loss = *best->val_loss;
  result.best_trial = static_cast<std::size_t>(best - result.log.data());
  return result;
}

TuneResult tune(const SearchSpace& space, const MultivariateSeries& series, const TuneOptions& options) {
  const auto samples = nn::make_samples(series, options.window);
  return tune(space, samples, options);
}

std::string format_trial_log(std::span<const TrialResult> log) {
  std::ostringstream out;
  out << "trial_id,bracket,rung,units,activation,lr,optimizer,layers,dropout,epochs,val_loss,status\n";
  for (const auto& t : log) {
    out << t.trial_id << ',' << t.bracket << ',' << t.rung << ',' << t.config.units << ','
        << nn::to_string(t.config.activation) << ',' << text::format_double(t.config.learning_rate) << ','
        << nn::to_string(t.config.optimizer) << ',' << t.config.num_layers << ','
        << text::format_double(t.config.dropout) << ',' << t.epochs_granted << ','
        << (t.val_loss ? text::format_double(*t.val_loss) : std::string()) << ',' << t.status_string() << '\n';
  }
  return out.str();
}

}  // namespace uocad::tuner
