#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include "artifacts.hpp"
#include "imgspace/errors.hpp"
#include "imgspace/noise.hpp"
#include "imgspace/rng.hpp"
#include "imgspace/runner.hpp"

namespace imgspace::runner {

using detail::Artifacts;

namespace {

constexpr std::uint64_t kNoiseStream = 0x401535;
constexpr std::uint64_t kSecondClassifierStream = 0x2C1A55;

struct Diagnostics {
  std::vector<trace::TraceStore> train;
  std::vector<trace::TraceStore> test;
  trace::CumulativeConfusion confusion;  // training samples, all runs
};

// Full-set runs whose traces drive selection. Traces are written as
// traces/diagnostic_run<r>_{train,test}.csv.
Diagnostics diagnose(const ExperimentConfig& cfg, const Datasets& data, bool trace_test,
                     Artifacts& art) {
  Diagnostics d;
  d.confusion = trace::CumulativeConfusion(data.train.category_count());
  for (std::size_t r = 0; r < cfg.diagnostic.runs; ++r) {
    TrainOptions o;
    o.epochs = cfg.diagnostic_epochs();
    o.trace_train = true;
    o.trace_test = trace_test;
    TrainedRun run = train_run(cfg, data.train, data.test, r, diagnostic_seeds(cfg.seed, r), o);
    art.log_training_set("diagnostic", r, data.train);
    art.note("diagnostic run " + std::to_string(r + 1) + "/" +
             std::to_string(cfg.diagnostic.runs) + " A=" +
             detail::format_double(run.metrics.accuracy));
    const std::string stem = "traces/diagnostic_run" + std::to_string(r);
    if (art.enabled()) run.train_trace->write_csv(art.path(stem + "_train.csv"));
    d.confusion.merge(run.train_trace->confusion());
    d.train.push_back(std::move(*run.train_trace));
    if (trace_test) {
      if (art.enabled()) run.test_trace->write_csv(art.path(stem + "_test.csv"));
      d.test.push_back(std::move(*run.test_trace));
    }
  }
  if (art.enabled()) d.confusion.write_json(art.path("confusion.json"));
  return d;
}

using RunHook = std::function<void(std::size_t, const TrainedRun&)>;

// cfg.runs paired runs on one fixed training set.
VariantResult run_variant(const ExperimentConfig& cfg, const std::string& name,
                          const data::LabeledDataset& train, const data::LabeledDataset& test,
                          std::optional<std::uint32_t> noise_index, bool curves,
                          Artifacts& art, const RunHook& hook = {}) {
  VariantResult v;
  v.name = name;
  v.training_size = train.size();
  v.categories = train.category_count();
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    TrainOptions o;
    o.curves = curves;
    o.noise_index = noise_index;
    TrainedRun run = train_run(cfg, train, test, r, run_seeds(cfg.seed, r), o);
    art.log_training_set(name, r, train);
    art.note(name + " run " + std::to_string(r + 1) + "/" + std::to_string(cfg.runs) +
             " n=" + std::to_string(train.size()) +
             " A=" + detail::format_double(run.metrics.accuracy));
    if (hook) hook(r, run);
    v.runs.push_back(std::move(run.metrics));
  }
  v.report = metrics::aggregate(v.runs);
  return v;
}

// Legitimate samples plus noise as an extra last category. The noise set is
// fixed for the experiment: its seed depends on the base seed only.
data::LabeledDataset with_noise(const data::LabeledDataset& legit, noise::NoiseSpec spec,
                                std::uint64_t base_seed) {
  spec.seed = derive_seed(derive_seed(base_seed, kNoiseStream), spec.seed);
  data::LabeledDataset n =
      noise::generate(spec, noise::noise_count(spec.rate, legit.size()), legit.dims());
  return data::with_extra_category(legit, n, "noise");
}

std::string file_stem(std::string name) {
  for (char& c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_'))
      c = '_';
  return name;
}

void run_baseline(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                  ExperimentResult& result) {
  trace::CumulativeConfusion confusion(data.train.category_count());
  VariantResult v;
  v.name = "full";
  v.training_size = data.train.size();
  v.categories = data.train.category_count();
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    TrainOptions o;
    o.curves = true;
    o.trace_train = true;
    TrainedRun run = train_run(cfg, data.train, data.test, r, run_seeds(cfg.seed, r), o);
    art.log_training_set(v.name, r, data.train);
    art.note("run " + std::to_string(r + 1) + "/" + std::to_string(cfg.runs) +
             " A=" + detail::format_double(run.metrics.accuracy));
    if (art.enabled())
      run.train_trace->write_csv(art.path("traces/run" + std::to_string(r) + "_train.csv"));
    confusion.merge(run.train_trace->confusion());
    v.runs.push_back(std::move(run.metrics));
  }
  v.report = metrics::aggregate(v.runs);
  if (art.enabled()) confusion.write_json(art.path("confusion.json"));
  result.variants.push_back(std::move(v));
}

void run_subgroups(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                   ExperimentResult& result) {
  Diagnostics d = diagnose(cfg, data, false, art);
  const auto& traces = d.train.front().traces();
  const std::uint32_t noise_index = static_cast<std::uint32_t>(data.train.category_count());

  for (const SubgroupSet& set : cfg.subgroups) {
    const std::size_t cap = select::equal_size_cap(traces, set.fraction);
    std::set<data::SampleId> ids;
    for (select::Criterion c : set.criteria) {
      std::vector<data::SampleId> part =
          select::select_subgroup(traces, {c, set.fraction}, cap);
      ids.insert(part.begin(), part.end());
    }
    std::vector<data::SampleId> sorted(ids.begin(), ids.end());
    if (art.enabled()) data::write_ids_json(art.path("subgroups/" + file_stem(set.name()) + ".json"), sorted);
    data::LabeledDataset legit = data::subset(data.train, sorted);
    result.variants.push_back(
        run_variant(cfg, set.name(), legit, data.test, std::nullopt, false, art));
    if (cfg.noise) {
      data::LabeledDataset noisy = with_noise(legit, *cfg.noise, cfg.seed);
      result.variants.push_back(
          run_variant(cfg, set.name() + "+noise", noisy, data.test, noise_index, false, art));
    }
  }
}

void run_noise_sweep(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                     ExperimentResult& result) {
  const std::uint32_t noise_index = static_cast<std::uint32_t>(data.train.category_count());
  result.variants.push_back(
      run_variant(cfg, "baseline", data.train, data.test, std::nullopt, false, art));
  for (const NamedNoise& v : cfg.noise_variants) {
    data::LabeledDataset noisy = with_noise(data.train, v.spec, cfg.seed);
    result.variants.push_back(run_variant(cfg, v.name, noisy, data.test, noise_index, false, art));
  }
}

std::vector<data::SampleId> illusive_training_ids(const ExperimentConfig& cfg,
                                                  const Diagnostics& d, Artifacts& art) {
  std::vector<data::SampleId> ids = trace::illusive_ids(d.train, cfg.illusive);
  if (art.enabled()) data::write_ids_json(art.path("illusive_train.json"), ids);
  art.note("illusive training samples: " + std::to_string(ids.size()));
  return ids;
}

void run_exclusion(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                   ExperimentResult& result) {
  Diagnostics d = diagnose(cfg, data, false, art);
  result.illusive_train = illusive_training_ids(cfg, d, art);
  data::LabeledDataset kept = select::exclude(data.train, result.illusive_train);
  result.variants.push_back(run_variant(cfg, "full", data.train, data.test, std::nullopt, true, art));
  result.variants.push_back(run_variant(cfg, "excluded", kept, data.test, std::nullopt, true, art));
}

void run_adversarial(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                     ExperimentResult& result) {
  Diagnostics d = diagnose(cfg, data, false, art);
  result.illusive_train = illusive_training_ids(cfg, d, art);
  data::LabeledDataset kept = select::exclude(data.train, result.illusive_train);

  auto attack = [&](const std::string& name, const data::LabeledDataset& train) {
    std::vector<AdversarialResult> rows(cfg.attacks.size());
    for (std::size_t a = 0; a < cfg.attacks.size(); ++a) {
      rows[a].variant = name;
      rows[a].epsilon = cfg.attacks[a].epsilon;
      rows[a].epochs = cfg.train.epochs;
    }
    result.variants.push_back(run_variant(
        cfg, name, train, data.test, std::nullopt, false, art,
        [&](std::size_t, const TrainedRun& run) {
          for (std::size_t a = 0; a < cfg.attacks.size(); ++a)
            rows[a].runs.push_back(adv::eval_robustness(run.net, data.test, cfg.attacks[a]));
        }));
    for (AdversarialResult& row : rows) {
      for (const adv::Robustness& r : row.runs) {
        row.mean.legitimate += r.legitimate;
        row.mean.adversarial += r.adversarial;
      }
      row.mean.legitimate /= static_cast<double>(row.runs.size());
      row.mean.adversarial /= static_cast<double>(row.runs.size());
      result.adversarial.push_back(std::move(row));
    }
  };
  attack("plain", data.train);
  attack("excluded", kept);
}

void run_relabel_glue(const ExperimentConfig& cfg, const Datasets& data, Artifacts& art,
                      ExperimentResult& result) {
  Diagnostics d = diagnose(cfg, data, true, art);
  result.illusive_train = illusive_training_ids(cfg, d, art);
  // Oracle flag: test samples the diagnostic models consistently get wrong.
  result.illusive_test = trace::illusive_ids(d.test, cfg.illusive);
  if (art.enabled()) data::write_ids_json(art.path("illusive_test.json"), result.illusive_test);
  art.note("illusive test samples: " + std::to_string(result.illusive_test.size()));

  select::RelabelPlan plan =
      select::build_relabel_plan(result.illusive_train, d.train.front(), d.confusion, cfg.relabel_k);
  if (art.enabled()) plan.write_json(art.path("relabel_plan.json"));
  result.plan = plan;

  const data::LabeledDataset relabeled = select::apply_plan(data.train, plan);
  const data::LabeledDataset hard = data::subset(data.train, result.illusive_train);
  std::vector<bool> oracle(data.test.size(), false);
  for (data::SampleId id : result.illusive_test) oracle[data.test.index_of(id)] = true;

  result.variants.push_back(
      run_variant(cfg, "single", data.train, data.test, std::nullopt, false, art));

  VariantResult glued;
  glued.name = "glued";
  glued.training_size = relabeled.size();
  glued.categories = relabeled.category_count();
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    TrainedRun main_run =
        train_run(cfg, relabeled, data.test, r, run_seeds(cfg.seed, r), TrainOptions{});
    art.log_training_set("glued/main", r, relabeled);
    Tensor rows = select::glue_rows(main_run.test_probs, plan);
    // A second classifier needs at least two categories among the hard set.
    std::set<std::uint32_t> hard_labels(hard.labels().begin(), hard.labels().end());
    if (hard_labels.size() >= 2) {
      RunSeeds s = run_seeds(derive_seed(cfg.seed, kSecondClassifierStream), r);
      TrainedRun second = train_run(cfg, hard, data.test, r, s, TrainOptions{});
      art.log_training_set("glued/second", r, hard);
      for (std::size_t i = 0; i < data.test.size(); ++i) {
        if (!oracle[i]) continue;
        auto src = second.test_probs.row(i);
        auto dst = rows.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
    metrics::RunMetrics m = metrics::compute_metrics(rows, data.test.labels());
    art.note("glued run " + std::to_string(r + 1) + "/" + std::to_string(cfg.runs) +
             " A=" + detail::format_double(m.accuracy));
    glued.runs.push_back(std::move(m));
  }
  glued.report = metrics::aggregate(glued.runs);
  result.variants.push_back(std::move(glued));
}

}  // namespace

const VariantResult& ExperimentResult::variant(const std::string& name) const {
  for (const VariantResult& v : variants)
    if (v.name == name) return v;
  throw LookupError("no variant named " + name);
}

std::vector<metrics::ReportRow> ExperimentResult::rows() const {
  std::vector<metrics::ReportRow> out;
  for (const VariantResult& v : variants) out.push_back({experiment, v.name, v.report});
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.kind == ExperimentKind::step_demo) return run_step_demo(cfg, opts);
  Datasets data = load_datasets(cfg.data, opts.data_dir);
  return run_experiment(cfg, data, opts);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Datasets& data,
                                const RunOptions& opts) {
  cfg.validate();
  if (cfg.kind == ExperimentKind::step_demo) return run_step_demo(cfg, opts);
  Artifacts art(cfg, opts);
  ExperimentResult result;
  result.experiment = cfg.name;
  art.note("train=" + std::to_string(data.train.size()) +
           " test=" + std::to_string(data.test.size()) +
           " categories=" + std::to_string(data.train.category_count()));
  switch (cfg.kind) {
    case ExperimentKind::baseline:
      run_baseline(cfg, data, art, result);
      break;
    case ExperimentKind::subgroup:
      run_subgroups(cfg, data, art, result);
      break;
    case ExperimentKind::noise_sweep:
      run_noise_sweep(cfg, data, art, result);
      break;
    case ExperimentKind::exclude_illusive:
      run_exclusion(cfg, data, art, result);
      break;
    case ExperimentKind::adv_eval:
      run_adversarial(cfg, data, art, result);
      break;
    case ExperimentKind::relabel_glue:
      run_relabel_glue(cfg, data, art, result);
      break;
    case ExperimentKind::step_demo:
      break;
  }
  art.finish(result);
  return result;
}

}  // namespace imgspace::runner
