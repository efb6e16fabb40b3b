#include "imgspace/config.hpp"
#include "imgspace/runner.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "imgspace/errors.hpp"
#include "json.hpp"

namespace imgspace::runner {

using nlohmann::json;

namespace {

const std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::baseline, "train"},
    {ExperimentKind::subgroup, "subgroup"},
    {ExperimentKind::noise_sweep, "noise-sweep"},
    {ExperimentKind::exclude_illusive, "exclude-illusive"},
    {ExperimentKind::adv_eval, "adv-eval"},
    {ExperimentKind::relabel_glue, "relabel-glue"},
    {ExperimentKind::step_demo, "step-demo"},
};

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw ConfigError(field + ": " + message);
}

// Runs f, prefixing any ConfigError with the field it came from.
void within(const std::string& field, const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

// Object view that remembers which keys were consumed so leftovers can be
// reported as unknown fields.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "must be a JSON object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  double real(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(field(key), "must be a number");
    double x = v->get<double>();
    if (!std::isfinite(x)) fail(field(key), "must be finite");
    return x;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0))
      fail(field(key), "must be a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(field(key), "must be a string");
    return v->get<std::string>();
  }

  const json& array(const std::string& key) {
    const json* v = find(key);
    if (!v || !v->is_array()) fail(field(key), "must be an array");
    return *v;
  }

  Reader object(const std::string& key) {
    const json* v = find(key);
    if (!v) fail(field(key), "missing");
    return Reader(*v, field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(field(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string indexed(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

data::SurrogateSpec read_surrogate(Reader r) {
  data::SurrogateSpec s;
  s.train = r.integer("train", s.train);
  s.test = r.integer("test", s.test);
  s.categories = r.integer("categories", s.categories);
  s.modes = r.integer("modes", s.modes);
  s.stray_fraction = r.real("stray_fraction", s.stray_fraction);
  s.stray_pull = r.real("stray_pull", s.stray_pull);
  s.label_noise = r.real("label_noise", s.label_noise);
  s.pixel_noise = r.real("pixel_noise", s.pixel_noise);
  s.max_blend = r.real("max_blend", s.max_blend);
  std::uint64_t shift = r.integer("max_shift", static_cast<std::uint64_t>(s.max_shift));
  if (shift > 16) fail(r.field("max_shift"), "must be <= 16");
  s.max_shift = static_cast<int>(shift);
  s.seed = r.integer("seed", s.seed);
  r.finish();
  return s;
}

DataConfig read_data(Reader r) {
  DataConfig d;
  d.source = r.text("source", d.source);
  if (d.source != "cifar10" && d.source != "synthetic")
    fail(r.field("source"), "must be \"cifar10\" or \"synthetic\"");
  d.dir = r.text("dir", "");
  d.train_subset = r.integer("train_subset", 0);
  d.test_subset = r.integer("test_subset", 0);
  d.subset_seed = r.integer("subset_seed", 0);
  if (r.has("synthetic")) {
    if (d.source != "synthetic") fail(r.field("synthetic"), "only valid with source \"synthetic\"");
    d.synthetic = read_surrogate(r.object("synthetic"));
  }
  r.finish();
  return d;
}

nn::LayerSpec read_layer(Reader r) {
  nn::LayerSpec l;
  l.kind = nn::layer_kind_from_string(r.text("type", ""));
  switch (l.kind) {
    case nn::LayerKind::dense:
      l.out = r.integer("out", 0);
      l.in = r.integer("in", 0);
      break;
    case nn::LayerKind::conv:
      l.kernel = r.integer("kernel", 0);
      l.channels = r.integer("channels", 0);
      l.stride = r.integer("stride", 1);
      break;
    case nn::LayerKind::maxpool:
      l.window = r.integer("window", 0);
      break;
    default:
      break;
  }
  r.finish();
  return l;
}

NetworkConfig read_network(const json& j) {
  NetworkConfig n;
  if (j.is_string()) {
    n.profile = j.get<std::string>();
  } else {
    Reader r(j, "network");
    n.profile = r.text("profile", r.has("layers") ? "custom" : n.profile);
    n.hidden = r.integer("hidden", n.hidden);
    if (r.has("layers")) {
      const json& layers = r.array("layers");
      for (std::size_t i = 0; i < layers.size(); ++i)
        within(indexed("network.layers", i), [&] {
          n.layers.push_back(read_layer(Reader(layers[i], "")));
        });
    }
    r.finish();
  }
  if (n.profile != "fast-mlp" && n.profile != "cifar-small" && n.profile != "custom")
    fail("network.profile", "must be \"fast-mlp\", \"cifar-small\" or \"custom\"");
  if (n.profile == "custom" && n.layers.empty())
    fail("network.layers", "a custom network needs a non-empty layer list");
  if (n.profile != "custom" && !n.layers.empty())
    fail("network.layers", "only valid with profile \"custom\"");
  return n;
}

nn::TrainConfig read_train(Reader r) {
  nn::TrainConfig t;
  t.learning_rate = r.real("learning_rate", t.learning_rate);
  t.momentum = r.real("momentum", t.momentum);
  t.batch_size = r.integer("batch_size", t.batch_size);
  t.epochs = r.integer("epochs", t.epochs);
  r.finish();
  return t;
}

noise::MixedGrid read_grid(Reader r) {
  noise::MixedGrid g;
  auto reals = [&](const std::string& key, std::vector<double>& out) {
    if (!r.has(key)) return;
    const json& a = r.array(key);
    out.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) fail(indexed(r.field(key), i), "must be a number");
      out.push_back(a[i].get<double>());
    }
  };
  reals("means", g.means);
  reals("stds", g.stds);
  if (r.has("scales")) {
    const json& a = r.array("scales");
    g.scales.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number_unsigned()) fail(indexed(r.field("scales"), i), "must be a non-negative integer");
      g.scales.push_back(a[i].get<unsigned>());
    }
  }
  r.finish();
  return g;
}

noise::NoiseSpec read_noise(Reader r) {
  noise::NoiseSpec n;
  within(r.field("kind"), [&] { n.kind = noise::noise_kind_from_string(r.text("kind", "uniform")); });
  n.mean = r.real("mean", n.mean);
  n.std = r.real("std", n.std);
  std::uint64_t scale = r.integer("scale", 0);
  if (scale > 16) fail(r.field("scale"), "must be <= 16");
  n.scale = static_cast<unsigned>(scale);
  n.rate = r.real("rate", n.rate);
  n.seed = r.integer("seed", n.seed);
  if (r.has("grid")) {
    if (n.kind != noise::NoiseKind::mixed) fail(r.field("grid"), "only valid with kind \"mixed\"");
    n.grid = read_grid(r.object("grid"));
  }
  r.finish();
  return n;
}

trace::IllusiveRule read_rule(Reader r) {
  trace::IllusiveRule rule;
  rule.burn_in = r.real("burn_in", rule.burn_in);
  rule.tau = r.real("tau", rule.tau);
  rule.rho = r.real("rho", rule.rho);
  r.finish();
  return rule;
}

SubgroupSet read_subgroup_set(Reader r) {
  SubgroupSet s;
  const json& criteria = r.array("criteria");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!criteria[i].is_string()) fail(indexed(r.field("criteria"), i), "must be a string");
    within(indexed(r.field("criteria"), i), [&] {
      s.criteria.push_back(select::criterion_from_string(criteria[i].get<std::string>()));
    });
  }
  s.fraction = r.real("p", s.fraction);
  r.finish();
  return s;
}

StepDemoConfig read_step_demo(Reader r) {
  StepDemoConfig s;
  const json& variants = r.array("variants");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    Reader v(variants[i], indexed(r.field("variants"), i));
    StepVariant sv;
    sv.name = v.text("name", "");
    const json& intervals = v.array("intervals");
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      Reader iv(intervals[k], indexed(v.field("intervals"), k));
      data::StepInterval interval;
      interval.from = iv.real("from", 0.0);
      interval.to = iv.real("to", 0.0);
      interval.count = iv.integer("count", 0);
      iv.finish();
      sv.intervals.push_back(interval);
    }
    v.finish();
    s.variants.push_back(std::move(sv));
  }
  if (r.has("hidden")) {
    const json& h = r.array("hidden");
    s.hidden.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (!h[i].is_number_unsigned()) fail(indexed(r.field("hidden"), i), "must be a positive integer");
      s.hidden.push_back(h[i].get<std::size_t>());
    }
  }
  s.grid_points = r.integer("grid_points", s.grid_points);
  r.finish();
  return s;
}

json layer_json(const nn::LayerSpec& l) {
  json j{{"type", nn::to_string(l.kind)}};
  switch (l.kind) {
    case nn::LayerKind::dense:
      j["out"] = l.out;
      if (l.in) j["in"] = l.in;
      break;
    case nn::LayerKind::conv:
      j["kernel"] = l.kernel;
      j["channels"] = l.channels;
      j["stride"] = l.stride;
      break;
    case nn::LayerKind::maxpool:
      j["window"] = l.window;
      break;
    default:
      break;
  }
  return j;
}

json noise_json(const noise::NoiseSpec& n) {
  json j{{"kind", noise::to_string(n.kind)}, {"mean", n.mean}, {"std", n.std},
         {"scale", n.scale}, {"rate", n.rate}, {"seed", n.seed}};
  if (n.kind == noise::NoiseKind::mixed)
    j["grid"] = {{"means", n.grid.means}, {"stds", n.grid.stds}, {"scales", n.grid.scales}};
  return j;
}

bool uses_illusive(ExperimentKind k) {
  return k == ExperimentKind::exclude_illusive || k == ExperimentKind::adv_eval ||
         k == ExperimentKind::relabel_glue;
}

bool uses_diagnostic(ExperimentKind k) {
  return uses_illusive(k) || k == ExperimentKind::subgroup;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

ExperimentKind kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  if (name == "baseline") return ExperimentKind::baseline;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string SubgroupSet::name() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (i) out << '+';
    out << "S_" << select::to_string(criteria[i]) << '^' << fraction;
  }
  return out.str();
}

void ExperimentConfig::validate() const {
  if (runs == 0) fail("runs", "must be >= 1");
  train.validate();

  if (kind != ExperimentKind::step_demo) {
    if (data.source == "synthetic")
      within("data.synthetic", [&] { data.synthetic.validate(); });
    std::size_t categories = data.source == "cifar10" ? 10 : data.synthetic.categories;
    if (data.train_subset && data.train_subset < categories)
      fail("data.train_subset", "must be 0 or at least the category count");
    if (data.test_subset && data.test_subset < categories)
      fail("data.test_subset", "must be 0 or at least the category count");
  }
  if (uses_diagnostic(kind) && diagnostic.runs == 0) fail("diagnostic.runs", "must be >= 1");
  if (kind == ExperimentKind::subgroup && diagnostic.runs != 1)
    fail("diagnostic.runs", "subgroups are selected by one trained model; must be 1");
  if (uses_illusive(kind)) within("illusive", [&] { illusive.validate(); });

  bool want_subgroups = kind == ExperimentKind::subgroup;
  if (want_subgroups != !subgroups.empty())
    fail("subgroups", want_subgroups ? "required for kind subgroup" : "only valid for kind subgroup");
  for (std::size_t i = 0; i < subgroups.size(); ++i) {
    const SubgroupSet& s = subgroups[i];
    std::string f = indexed("subgroups", i);
    if (s.criteria.empty()) fail(f + ".criteria", "must not be empty");
    std::set<select::Criterion> distinct(s.criteria.begin(), s.criteria.end());
    if (distinct.size() != s.criteria.size()) fail(f + ".criteria", "repeats a criterion");
    within(f, [&] { select::SubgroupSpec{s.criteria.front(), s.fraction}.validate(); });
  }

  data::Dims dims;  // every supported source is 32x32x3
  if (noise) {
    if (kind != ExperimentKind::subgroup) fail("noise", "only valid for kind subgroup");
    within("noise", [&] { noise->validate(dims); });
  }
  bool want_variants = kind == ExperimentKind::noise_sweep;
  if (want_variants != !noise_variants.empty())
    fail("noise_variants", want_variants ? "required for kind noise-sweep"
                                         : "only valid for kind noise-sweep");
  std::set<std::string> names;
  for (std::size_t i = 0; i < noise_variants.size(); ++i) {
    std::string f = indexed("noise_variants", i);
    if (noise_variants[i].name.empty()) fail(f + ".name", "must not be empty");
    if (noise_variants[i].name == "baseline") fail(f + ".name", "\"baseline\" is reserved");
    if (!names.insert(noise_variants[i].name).second) fail(f + ".name", "duplicate variant name");
    within(f, [&] { noise_variants[i].spec.validate(dims); });
  }

  bool want_attacks = kind == ExperimentKind::adv_eval;
  if (want_attacks != !attacks.empty())
    fail("attacks", want_attacks ? "required for kind adv-eval" : "only valid for kind adv-eval");
  for (std::size_t i = 0; i < attacks.size(); ++i)
    within(indexed("attacks", i), [&] { attacks[i].validate(); });

  bool want_relabel = kind == ExperimentKind::relabel_glue;
  if (want_relabel != (relabel_k != 0))
    fail("relabel.k", want_relabel ? "required (>= 1) for kind relabel-glue"
                                   : "only valid for kind relabel-glue");

  bool want_step = kind == ExperimentKind::step_demo;
  if (want_step != step_demo.has_value())
    fail("step_demo", want_step ? "required for kind step-demo" : "only valid for kind step-demo");
  if (step_demo) {
    if (step_demo->variants.empty()) fail("step_demo.variants", "must not be empty");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < step_demo->variants.size(); ++i) {
      const StepVariant& v = step_demo->variants[i];
      std::string f = indexed("step_demo.variants", i);
      if (v.name.empty()) fail(f + ".name", "must not be empty");
      if (!seen.insert(v.name).second) fail(f + ".name", "duplicate variant name");
      if (v.intervals.empty()) fail(f + ".intervals", "must not be empty");
      for (std::size_t k = 0; k < v.intervals.size(); ++k) {
        const data::StepInterval& iv = v.intervals[k];
        std::string g = indexed(f + ".intervals", k);
        if (!(iv.from >= 0.0 && iv.from < iv.to && iv.to <= 1.0))
          fail(g, "needs 0 <= from < to <= 1");
        if (iv.count == 0) fail(g + ".count", "must be positive");
      }
    }
    if (step_demo->hidden.empty()) fail("step_demo.hidden", "must not be empty");
    for (std::size_t h : step_demo->hidden)
      if (h == 0) fail("step_demo.hidden", "widths must be positive");
    if (step_demo->grid_points < 2) fail("step_demo.grid_points", "must be >= 2");
  } else {
    // Check the layer stack against the input now rather than after data load.
    std::size_t categories = data.source == "cifar10" ? 10 : data.synthetic.categories;
    within("network", [&] {
      if (network.profile == "custom") {
        nn::Network probe(network_spec(network, {3, 32, 32}, categories, 0));
      } else if (network.hidden == 0) {
        throw ConfigError("hidden must be positive");
      }
    });
  }
}

ExperimentConfig parse_config(const std::string& json_text, ExperimentKind kind) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  Reader r(doc, "");
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (kind == ExperimentKind::subgroup) cfg.diagnostic.runs = 1;
  if (r.has("kind")) {
    std::string named = r.text("kind", "");
    ExperimentKind k;
    within("kind", [&] { k = kind_from_string(named); });
    if (k != kind)
      fail("kind", "config declares '" + named + "' but was run as '" + to_string(kind) + "'");
  }
  cfg.name = r.text("name", to_string(kind));
  if (cfg.name.empty()) fail("name", "must not be empty");
  if (kind == ExperimentKind::step_demo) {
    if (r.has("data")) fail("data", "not used by kind step-demo");
    if (r.has("network")) fail("network", "not used by kind step-demo; see step_demo.hidden");
  }
  if (r.has("data")) cfg.data = read_data(r.object("data"));
  if (const json* n = r.find("network")) cfg.network = read_network(*n);
  if (r.has("train")) cfg.train = read_train(r.object("train"));
  cfg.runs = r.integer("runs", cfg.runs);
  cfg.seed = r.integer("seed", cfg.seed);
  cfg.output = r.text("output", cfg.output.string());

  if (r.has("diagnostic")) {
    if (!uses_diagnostic(kind)) fail("diagnostic", "not used by kind " + to_string(kind));
    Reader d = r.object("diagnostic");
    cfg.diagnostic.runs = d.integer("runs", cfg.diagnostic.runs);
    cfg.diagnostic.epochs = d.integer("epochs", cfg.diagnostic.epochs);
    d.finish();
  }
  if (r.has("illusive")) {
    if (!uses_illusive(kind)) fail("illusive", "not used by kind " + to_string(kind));
    cfg.illusive = read_rule(r.object("illusive"));
  }
  if (r.has("subgroups")) {
    const json& sets = r.array("subgroups");
    if (sets.empty()) fail("subgroups", "must not be empty");
    for (std::size_t i = 0; i < sets.size(); ++i)
      cfg.subgroups.push_back(read_subgroup_set(Reader(sets[i], indexed("subgroups", i))));
  }
  if (r.has("noise")) cfg.noise = read_noise(r.object("noise"));
  if (r.has("noise_variants")) {
    const json& vs = r.array("noise_variants");
    if (vs.empty()) fail("noise_variants", "must not be empty");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      Reader v(vs[i], indexed("noise_variants", i));
      NamedNoise nn;
      nn.name = v.text("name", "");
      nn.spec = read_noise(v.object("noise"));
      v.finish();
      cfg.noise_variants.push_back(std::move(nn));
    }
  }
  if (r.has("attacks")) {
    const json& as = r.array("attacks");
    if (as.empty()) fail("attacks", "must not be empty");
    for (std::size_t i = 0; i < as.size(); ++i) {
      Reader a(as[i], indexed("attacks", i));
      adv::AttackConfig ac;
      if (!a.has("epsilon")) fail(a.field("epsilon"), "missing");
      ac.epsilon = a.real("epsilon", 0.0);
      a.finish();
      cfg.attacks.push_back(ac);
    }
  }
  if (r.has("relabel")) {
    Reader rl = r.object("relabel");
    if (!rl.has("k")) fail("relabel.k", "missing");
    cfg.relabel_k = rl.integer("k", 0);
    if (cfg.relabel_k == 0) fail("relabel.k", "must be >= 1");
    rl.finish();
  }
  if (r.has("step_demo")) cfg.step_demo = read_step_demo(r.object("step_demo"));
  r.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), kind);
}

std::string to_json(const ExperimentConfig& cfg) {
  json j;
  j["kind"] = to_string(cfg.kind);
  j["name"] = cfg.name;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["output"] = cfg.output.string();
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"momentum", cfg.train.momentum},
                {"batch_size", cfg.train.batch_size},
                {"epochs", cfg.train.epochs}};
  if (cfg.kind == ExperimentKind::step_demo) {
    json variants = json::array();
    for (const StepVariant& v : cfg.step_demo->variants) {
      json iv = json::array();
      for (const data::StepInterval& i : v.intervals)
        iv.push_back({{"from", i.from}, {"to", i.to}, {"count", i.count}});
      variants.push_back({{"name", v.name}, {"intervals", iv}});
    }
    j["step_demo"] = {{"variants", variants},
                      {"hidden", cfg.step_demo->hidden},
                      {"grid_points", cfg.step_demo->grid_points}};
    return j.dump(2) + "\n";
  }

  json d{{"source", cfg.data.source},
         {"train_subset", cfg.data.train_subset},
         {"test_subset", cfg.data.test_subset},
         {"subset_seed", cfg.data.subset_seed}};
  if (cfg.data.source == "cifar10") {
    d["dir"] = cfg.data.dir.string();
  } else {
    const data::SurrogateSpec& s = cfg.data.synthetic;
    d["synthetic"] = {{"train", s.train}, {"test", s.test}, {"categories", s.categories},
                      {"modes", s.modes}, {"stray_fraction", s.stray_fraction},
                      {"stray_pull", s.stray_pull}, {"label_noise", s.label_noise},
                      {"pixel_noise", s.pixel_noise}, {"max_blend", s.max_blend},
                      {"max_shift", s.max_shift}, {"seed", s.seed}};
  }
  j["data"] = d;
  json net{{"profile", cfg.network.profile}};
  if (cfg.network.profile == "fast-mlp") net["hidden"] = cfg.network.hidden;
  if (cfg.network.profile == "custom") {
    json layers = json::array();
    for (const nn::LayerSpec& l : cfg.network.layers) layers.push_back(layer_json(l));
    net["layers"] = layers;
  }
  j["network"] = net;
  if (uses_diagnostic(cfg.kind))
    j["diagnostic"] = {{"runs", cfg.diagnostic.runs}, {"epochs", cfg.diagnostic_epochs()}};
  if (uses_illusive(cfg.kind))
    j["illusive"] = {{"burn_in", cfg.illusive.burn_in},
                     {"tau", cfg.illusive.tau},
                     {"rho", cfg.illusive.rho}};
  if (!cfg.subgroups.empty()) {
    json sets = json::array();
    for (const SubgroupSet& s : cfg.subgroups) {
      json crit = json::array();
      for (select::Criterion c : s.criteria) crit.push_back(select::to_string(c));
      sets.push_back({{"criteria", crit}, {"p", s.fraction}});
    }
    j["subgroups"] = sets;
  }
  if (cfg.noise) j["noise"] = noise_json(*cfg.noise);
  if (!cfg.noise_variants.empty()) {
    json vs = json::array();
    for (const NamedNoise& v : cfg.noise_variants)
      vs.push_back({{"name", v.name}, {"noise", noise_json(v.spec)}});
    j["noise_variants"] = vs;
  }
  if (!cfg.attacks.empty()) {
    json as = json::array();
    for (const adv::AttackConfig& a : cfg.attacks) as.push_back({{"epsilon", a.epsilon}});
    j["attacks"] = as;
  }
  if (cfg.relabel_k) j["relabel"] = {{"k", cfg.relabel_k}};
  return j.dump(2) + "\n";
}

}  // namespace imgspace::runner
