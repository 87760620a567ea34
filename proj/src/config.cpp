#include "hmlr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "hmlr/errors.hpp"

namespace hmlr {

namespace {

namespace pt = boost::property_tree;

std::string fmt_double(double v) { return fmt::format("{}", v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& text, const char* what) {
  fail(ErrorKind::Config, fmt::format("'{}' = '{}' is not {}", key, text, what));
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) bad_value(key, text, "a number");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    bad_value(key, text, "a non-negative integer");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) bad_value(key, text, "a non-empty list");
  return out;
}

std::string emit_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s;
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string& name, const std::string&)> set;
};

template <class T>
Field size_field(const char* section, const char* key, T ExperimentConfig::* outer, std::size_t T::* inner) {
  return {section, key, [=](const ExperimentConfig& c) { return std::to_string(c.*outer.*inner); },
          [=](ExperimentConfig& c, const std::string& n, const std::string& v) { c.*outer.*inner = parse_u64(n, v); }};
}

template <class T>
Field real_field(const char* section, const char* key, T ExperimentConfig::* outer, double T::* inner) {
  return {section, key, [=](const ExperimentConfig& c) { return fmt_double(c.*outer.*inner); },
          [=](ExperimentConfig& c, const std::string& n, const std::string& v) { c.*outer.*inner = parse_double(n, v); }};
}

Field path_field(const char* key, std::string PathsConfig::* member) {
  return {"paths", key, [=](const ExperimentConfig& c) { return c.paths.*member; },
          [=](ExperimentConfig& c, const std::string& n, const std::string& v) {
            const std::string t = trim(v);
            if (t.empty()) bad_value(n, v, "a path");
            c.paths.*member = t;
          }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(size_field("system", "n_rx", &C::system, &SystemDims::n_rx));
    f.push_back(size_field("system", "n_tx", &C::system, &SystemDims::n_tx));
    f.push_back({"system", "constellation", [](const C& c) { return std::to_string(c.constellation_order); },
                 [](C& c, const std::string& n, const std::string& v) { c.constellation_order = parse_u64(n, v); }});
    f.push_back(size_field("system", "layers", &C::system, &SystemDims::layers));

    f.push_back({"channel", "rho_k", [](const C& c) { return fmt_double(c.rho_k); },
                 [](C& c, const std::string& n, const std::string& v) { c.rho_k = parse_double(n, v); }});
    f.push_back(real_field("channel", "rho", &C::jakes, &JakesConfig::rho));
    f.push_back(size_field("channel", "horizon", &C::jakes, &JakesConfig::horizon));

    f.push_back(size_field("hypernet", "hidden", &C::hypernet, &HypernetConfig::hidden));
    f.push_back(real_field("hypernet", "output_gain", &C::hypernet, &HypernetConfig::output_gain));
    f.push_back(real_field("hypernet", "output_bias", &C::hypernet, &HypernetConfig::output_bias));

    f.push_back(real_field("training", "beta", &C::training, &TrainConfig::beta));
    f.push_back(size_field("training", "batch_channels", &C::training, &TrainConfig::batch_channels));
    f.push_back(size_field("training", "draws_per_channel", &C::training, &TrainConfig::draws_per_channel));
    f.push_back(size_field("training", "iterations", &C::training, &TrainConfig::iterations));
    f.push_back(real_field("training", "snr_min_db", &C::training, &TrainConfig::snr_min_db));
    f.push_back(real_field("training", "snr_max_db", &C::training, &TrainConfig::snr_max_db));
    auto adam = [](const char* key, double AdamConfig::* m) {
      return Field{"training", key, [=](const C& c) { return fmt_double(c.training.adam.*m); },
                   [=](C& c, const std::string& n, const std::string& v) { c.training.adam.*m = parse_double(n, v); }};
    };
    f.push_back(adam("lr_init", &AdamConfig::lr));
    f.push_back(adam("adam_beta1", &AdamConfig::beta1));
    f.push_back(adam("adam_beta2", &AdamConfig::beta2));
    f.push_back(adam("adam_eps", &AdamConfig::eps));
    auto sched_real = [](const char* key, double SchedulerConfig::* m) {
      return Field{"training", key, [=](const C& c) { return fmt_double(c.training.scheduler.*m); },
                   [=](C& c, const std::string& n, const std::string& v) { c.training.scheduler.*m = parse_double(n, v); }};
    };
    auto sched_size = [](const char* key, std::size_t SchedulerConfig::* m) {
      return Field{"training", key, [=](const C& c) { return std::to_string(c.training.scheduler.*m); },
                   [=](C& c, const std::string& n, const std::string& v) { c.training.scheduler.*m = parse_u64(n, v); }};
    };
    f.push_back(sched_size("check_interval", &SchedulerConfig::check_interval));
    f.push_back(sched_real("lr_factor", &SchedulerConfig::factor));
    f.push_back(sched_real("lr_floor", &SchedulerConfig::floor));
    f.push_back(sched_size("patience", &SchedulerConfig::patience));
    f.push_back(sched_real("threshold", &SchedulerConfig::threshold));

    f.push_back({"bank", "n_sequences", [](const C& c) { return std::to_string(c.bank_sequences); },
                 [](C& c, const std::string& n, const std::string& v) { c.bank_sequences = parse_u64(n, v); }});
    f.push_back(size_field("bank", "pretrain_iterations", &C::pretrain, &PretrainConfig::iterations));
    f.push_back(size_field("bank", "pretrain_batch", &C::pretrain, &PretrainConfig::batch));
    f.push_back(real_field("bank", "pretrain_lr", &C::pretrain, &PretrainConfig::lr));
    f.push_back(real_field("bank", "pretrain_snr_min_db", &C::pretrain, &PretrainConfig::snr_min_db));
    f.push_back(real_field("bank", "pretrain_snr_max_db", &C::pretrain, &PretrainConfig::snr_max_db));
    f.push_back(real_field("bank", "pretrain_init_std", &C::pretrain, &PretrainConfig::init_std));
    f.push_back(size_field("bank", "pretrain_eval_batch", &C::pretrain, &PretrainConfig::eval_batch));

    f.push_back(size_field("evaluation", "n_test_sequences", &C::evaluation, &EvaluationConfig::n_test_sequences));
    f.push_back({"evaluation", "snr_grid_db", [](const C& c) { return emit_list(c.evaluation.snr_grid_db); },
                 [](C& c, const std::string& n, const std::string& v) { c.evaluation.snr_grid_db = parse_list(n, v); }});
    f.push_back(size_field("evaluation", "trials_per_channel", &C::evaluation, &EvaluationConfig::trials_per_channel));
    f.push_back({"evaluation", "hop_snr_db", [](const C& c) { return emit_list(c.evaluation.hop_snr_db); },
                 [](C& c, const std::string& n, const std::string& v) { c.evaluation.hop_snr_db = parse_list(n, v); }});
    f.push_back(size_field("evaluation", "ml_cap", &C::evaluation, &EvaluationConfig::ml_cap));

    f.push_back({"run", "seed", [](const C& c) { return std::to_string(c.seed); },
                 [](C& c, const std::string& n, const std::string& v) { c.seed = parse_u64(n, v); }});
    f.push_back({"run", "workers", [](const C& c) { return std::to_string(c.workers); },
                 [](C& c, const std::string& n, const std::string& v) { c.workers = parse_u64(n, v); }});

    f.push_back(path_field("channels", &PathsConfig::channels));
    f.push_back(path_field("bank", &PathsConfig::bank));
    f.push_back(path_field("hypermimo", &PathsConfig::hypermimo));
    f.push_back(path_field("hypermimo_lr", &PathsConfig::hypermimo_lr));
    f.push_back(path_field("results", &PathsConfig::results));
    return f;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::finalize() {
  hypernet.dims = system;
  try {
    system.validate();
    KroneckerConfig{system.n_rx, system.n_tx, rho_k}.validate();
    jakes.validate();
    training.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  require(constellation_order == 4 || constellation_order == 16 || constellation_order == 64, ErrorKind::Config,
          "system.constellation must be 4, 16 or 64");
  require(hypernet.hidden >= 1, ErrorKind::Config, "hypernet.hidden must be positive");
  require(training.scheduler.check_interval >= 1 && training.scheduler.patience >= 1, ErrorKind::Config,
          "check_interval and patience must be positive");
  require(training.scheduler.factor > 0.0 && training.scheduler.factor < 1.0, ErrorKind::Config,
          "lr_factor must lie in (0, 1)");
  require(pretrain.iterations >= 1 && pretrain.batch >= 1 && pretrain.eval_batch >= 1 && pretrain.lr > 0.0,
          ErrorKind::Config, "pretraining sizes and rate must be positive");
  require(pretrain.snr_min_db <= pretrain.snr_max_db, ErrorKind::Config, "empty pretraining SNR range");
  require(bank_sequences >= 1, ErrorKind::Config, "bank.n_sequences must be positive");
  require(evaluation.n_test_sequences >= 1 && evaluation.trials_per_channel >= 1, ErrorKind::Config,
          "evaluation sizes must be positive");
  require(workers >= 1, ErrorKind::Config, "run.workers must be positive");
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return system == o.system && constellation_order == o.constellation_order && rho_k == o.rho_k &&
         jakes.rho == o.jakes.rho && jakes.horizon == o.jakes.horizon && hypernet == o.hypernet &&
         training == o.training && bank_sequences == o.bank_sequences && pretrain == o.pretrain &&
         evaluation == o.evaluation && seed == o.seed && workers == o.workers && paths == o.paths;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, std::string("") + e.what());
  }
  ExperimentConfig cfg;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty()) fail(ErrorKind::Config, "key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const Field* match = nullptr;
      for (const Field& f : fields()) {
        if (section == f.section && key == f.key) match = &f;
      }
      if (match == nullptr) fail(ErrorKind::Config, "unknown key '" + name + "'");
      match->set(cfg, name, value.data());
    }
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  }
  return out;
}

}  // namespace hmlr
