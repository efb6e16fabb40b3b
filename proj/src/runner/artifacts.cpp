#include "artifacts.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "imgspace/errors.hpp"

namespace imgspace::runner::detail {

namespace {

std::uint64_t id_set_hash(const data::LabeledDataset& ds) {
  std::vector<data::SampleId> ids = ds.ids();
  std::sort(ids.begin(), ids.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over little-endian ids
  for (data::SampleId id : ids)
    for (int b = 0; b < 8; ++b) {
      h ^= (id >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  return h;
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Artifacts::Artifacts(const ExperimentConfig& cfg, const RunOptions& opts)
    : cfg_(cfg), enabled_(opts.write_outputs), log_(opts.log) {
  runs_log_ << "variant,run,samples,id_hash,same_as_run0\n";
}

std::filesystem::path Artifacts::path(const std::string& relative) const {
  std::filesystem::path p = cfg_.output / relative;
  std::filesystem::create_directories(p.parent_path());
  return p;
}

void Artifacts::write_text(const std::string& relative, const std::string& content) const {
  if (!enabled_) return;
  std::filesystem::path p = path(relative);
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw StateError("cannot write " + p.string());
}

void Artifacts::note(const std::string& line) const {
  if (log_) *log_ << "[" << cfg_.name << "] " << line << std::endl;
}

void Artifacts::log_training_set(const std::string& variant, std::size_t run,
                                 const data::LabeledDataset& train) {
  const std::uint64_t h = id_set_hash(train);
  auto [it, fresh] = first_hash_.emplace(variant, h);
  if (!fresh && it->second != h)
    throw StateError("training set of variant " + variant + " changed at run " +
                     std::to_string(run));
  char hex[20];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  runs_log_ << variant << ',' << run << ',' << train.size() << ',' << hex << ','
            << (fresh ? "first" : "yes") << '\n';
}

void Artifacts::finish(const ExperimentResult& result) const {
  if (!enabled_) return;
  write_text("config.json", to_json(cfg_));
  write_text("runs.log", runs_log_.str());

  if (!result.variants.empty()) {
    std::vector<metrics::ReportRow> rows = result.rows();
    metrics::write_report_csv(path("metrics.csv"), rows);

    std::ostringstream curves;
    bool any = false;
    curves << "epoch,train_accuracy,test_accuracy,gap,variant\n";
    for (const VariantResult& v : result.variants) {
      const auto& tr = v.report.train_curve;
      const auto& te = v.report.test_curve;
      if (tr.empty() || tr.size() != te.size()) continue;
      any = true;
      std::vector<double> gap = metrics::overfit_gap(tr, te);
      for (std::size_t e = 0; e < tr.size(); ++e)
        curves << e + 1 << ',' << format_double(tr[e]) << ',' << format_double(te[e]) << ','
               << format_double(gap[e]) << ',' << v.name << '\n';
    }
    if (any) write_text("accuracy_curves.csv", curves.str());
  }

  if (!result.adversarial.empty()) {
    std::ostringstream out;
    out << "epochs,epsilon,A_leg,A_adv,variant\n";
    for (const AdversarialResult& a : result.adversarial)
      out << a.epochs << ',' << format_double(a.epsilon) << ',' << percent(a.mean.legitimate)
          << ',' << percent(a.mean.adversarial) << ',' << a.variant << '\n';
    write_text("adversarial.csv", out.str());
  }
}

}  // namespace imgspace::runner::detail
