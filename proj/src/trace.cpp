#include "imgspace/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "imgspace/errors.hpp"

namespace imgspace::trace {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

std::size_t SampleTrace::correct_count() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct; }));
}

const EpochRecord& SampleTrace::final_record() const {
  if (records.empty()) throw StateError("trace of sample " + std::to_string(id) + " is empty");
  return records.back();
}

std::optional<double> SampleTrace::illusiveness() const {
  const auto& r = final_record();
  if (r.correct) return std::nullopt;
  return r.confidence;
}

std::optional<std::uint32_t> SampleTrace::modal_wrong_prediction() const {
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& r : records) {
    if (!r.correct) ++counts[r.predicted];
  }
  std::optional<std::uint32_t> best;
  std::size_t best_n = 0;
  for (const auto& [cat, n] : counts) {  // ascending category order
    if (n > best_n) {
      best = cat;
      best_n = n;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

CumulativeConfusion::CumulativeConfusion(std::size_t categories)
    : categories_(categories), counts_(categories * categories, 0) {}

std::uint64_t CumulativeConfusion::at(std::size_t truth, std::size_t predicted) const {
  if (truth >= categories_ || predicted >= categories_) {
    throw LookupError("confusion index out of range");
  }
  return counts_[truth * categories_ + predicted];
}

void CumulativeConfusion::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= categories_ || predicted >= categories_) {
    throw LookupError("confusion index (" + std::to_string(truth) + ", " +
                      std::to_string(predicted) + ") out of range for " +
                      std::to_string(categories_) + " categories");
  }
  counts_[truth * categories_ + predicted] += n;
}

void CumulativeConfusion::mark(std::size_t run, std::size_t epoch) {
  runs_.insert(run);
  if (first_epoch_ == 0 || epoch < first_epoch_) first_epoch_ = epoch;
  last_epoch_ = std::max(last_epoch_, epoch);
}

void CumulativeConfusion::merge(const CumulativeConfusion& other) {
  if (categories_ == 0 && counts_.empty()) *this = CumulativeConfusion(other.categories_);
  if (other.categories_ != categories_) {
    throw StateError("cannot merge confusion matrices of different sizes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  for (std::size_t r : other.runs_) runs_.insert(r);
  if (other.first_epoch_ != 0) {
    if (first_epoch_ == 0 || other.first_epoch_ < first_epoch_) first_epoch_ = other.first_epoch_;
    last_epoch_ = std::max(last_epoch_, other.last_epoch_);
  }
}

std::uint64_t CumulativeConfusion::total() const {
  std::uint64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

std::vector<std::uint64_t> CumulativeConfusion::row_sums() const {
  std::vector<std::uint64_t> rows(categories_, 0);
  for (std::size_t t = 0; t < categories_; ++t) {
    for (std::size_t q = 0; q < categories_; ++q) rows[t] += counts_[t * categories_ + q];
  }
  return rows;
}

std::string CumulativeConfusion::to_json() const {
  nlohmann::ordered_json j;
  j["categories"] = categories_;
  j["epochs"] = {first_epoch_, last_epoch_};
  j["runs"] = std::vector<std::size_t>(runs_.begin(), runs_.end());
  auto grid = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < categories_; ++t) {
    grid.push_back(std::vector<std::uint64_t>(counts_.begin() + t * categories_,
                                              counts_.begin() + (t + 1) * categories_));
  }
  j["counts"] = grid;
  return j.dump(1);
}

void CumulativeConfusion::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

// ---------------------------------------------------------------------------

TraceStore::TraceStore(const data::LabeledDataset& ds, std::size_t run)
    : run_(run), confusion_(ds.category_count()) {
  traces_.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    index_.emplace(ds.id(i), i);
    traces_.push_back({ds.id(i), ds.label(i), {}});
  }
}

const SampleTrace& TraceStore::trace(data::SampleId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("no trace for sample " + std::to_string(id));
  return traces_[it->second];
}

CumulativeConfusion TraceStore::record_predictions(const Tensor& probs,
                                                   const data::LabeledDataset& ds) {
  if (ds.size() != traces_.size()) {
    throw StateError("trace store holds " + std::to_string(traces_.size()) +
                     " samples, dataset has " + std::to_string(ds.size()));
  }
  if (ds.category_count() != confusion_.categories()) {
    throw StateError("dataset category count does not match trace store");
  }
  if (probs.rank() != 2 || probs.dim(0) != ds.size() ||
      probs.dim(1) != ds.category_count()) {
    throw StateError("prediction rows " + to_string(probs.shape()) +
                     " do not match dataset " + std::to_string(ds.size()) + "x" +
                     std::to_string(ds.category_count()));
  }
  const std::size_t epoch = epochs_ + 1;
  CumulativeConfusion inc(confusion_.categories());
  inc.mark(run_, epoch);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SampleTrace& t = traces_[i];
    if (t.id != ds.id(i) || t.truth != ds.label(i)) {
      throw StateError("sample " + std::to_string(ds.id(i)) + " at position " +
                       std::to_string(i) + " does not match the traced sample " +
                       std::to_string(t.id));
    }
    const auto row = probs.row(i);
    const auto q = static_cast<std::uint32_t>(argmax(row));
    t.records.push_back({q, row[q], q == t.truth});
    inc.add(t.truth, q);
  }
  epochs_ = epoch;
  confusion_.merge(inc);
  return inc;
}

CumulativeConfusion TraceStore::record_epoch(const nn::Network& net,
                                             const data::LabeledDataset& ds) {
  if (net.output_width() != ds.category_count()) {
    throw StateError("network outputs " + std::to_string(net.output_width()) +
                     " categories, dataset has " + std::to_string(ds.category_count()));
  }
  return record_predictions(nn::predict(net, ds.size(), ds.gatherer()), ds);
}

void TraceStore::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "sample_id,epoch,predicted,confidence,correct\n";
  char buf[64];
  for (const auto& t : traces_) {
    for (std::size_t e = 0; e < t.records.size(); ++e) {
      const auto& r = t.records[e];
      std::snprintf(buf, sizeof buf, "%.17g", r.confidence);
      out << t.id << ',' << (e + 1) << ',' << r.predicted << ',' << buf << ','
          << (r.correct ? 1 : 0) << '\n';
    }
  }
}

TraceStore TraceStore::read_csv(const std::filesystem::path& path,
                                const data::LabeledDataset& ds, std::size_t run) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  TraceStore store(ds, run);
  std::string line;
  std::getline(in, line);
  if (line != "sample_id,epoch,predicted,confidence,correct") {
    throw IngestionError(path.string() + ": unexpected header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[5];
    for (auto& s : f) std::getline(ls, s, ',');
    try {
      const auto id = static_cast<data::SampleId>(std::stoull(f[0]));
      const std::size_t epoch = std::stoul(f[1]);
      auto it = store.index_.find(id);
      if (it == store.index_.end()) throw LookupError("unknown sample id " + f[0]);
      auto& t = store.traces_[it->second];
      if (epoch != t.records.size() + 1) throw StateError("epochs out of order");
      const auto pred = static_cast<std::uint32_t>(std::stoul(f[2]));
      if (pred >= ds.category_count()) throw StateError("prediction out of range");
      t.records.push_back({pred, std::stod(f[3]), f[4] == "1"});
      store.confusion_.add(t.truth, pred);
      store.confusion_.mark(run, epoch);
    } catch (const std::exception& e) {
      throw IngestionError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  store.epochs_ = store.traces_.empty() ? 0 : store.traces_.front().records.size();
  for (const auto& t : store.traces_) {
    if (t.records.size() != store.epochs_) {
      throw IngestionError(path.string() + ": sample " + std::to_string(t.id) +
                           " has a different epoch count");
    }
  }
  return store;
}

// ---------------------------------------------------------------------------

void IllusiveRule::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(burn_in)) throw ConfigError("illusive.burn_in must lie in [0, 1]");
  if (!unit(tau)) throw ConfigError("illusive.tau must lie in [0, 1]");
  if (!unit(rho)) throw ConfigError("illusive.rho must lie in [0, 1]");
}

namespace {
constexpr double kSlack = 1e-12;
}

bool flagged_in_run(const SampleTrace& trace, const IllusiveRule& rule) {
  const std::size_t e = trace.records.size();
  if (e < 2) throw StateError("illusiveness needs at least 2 traced epochs");
  std::size_t skip = static_cast<std::size_t>(std::floor(rule.burn_in * static_cast<double>(e)));
  skip = std::min(skip, e - 1);
  std::size_t correct = 0;
  for (std::size_t i = skip; i < e; ++i) correct += trace.records[i].correct ? 1 : 0;
  const double fraction = static_cast<double>(correct) / static_cast<double>(e - skip);
  return fraction <= rule.tau + kSlack;
}

std::vector<data::SampleId> illusive_ids(std::span<const TraceStore* const> runs,
                                         const IllusiveRule& rule) {
  rule.validate();
  if (runs.empty()) throw StateError("no trace runs given");
  std::map<data::SampleId, std::size_t> flags;
  for (const TraceStore* store : runs) {
    if (store->traces().empty()) throw StateError("trace store is empty");
    for (const auto& t : store->traces()) {
      auto& n = flags[t.id];
      if (flagged_in_run(t, rule)) ++n;
    }
  }
  const double need = rule.rho * static_cast<double>(runs.size());
  std::vector<data::SampleId> out;
  for (const auto& [id, n] : flags) {
    if (n >= 1 && static_cast<double>(n) + kSlack >= need) out.push_back(id);
  }
  return out;
}

std::vector<data::SampleId> illusive_ids(std::span<const TraceStore> runs,
                                         const IllusiveRule& rule) {
  std::vector<const TraceStore*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  return illusive_ids(std::span<const TraceStore* const>(ptrs), rule);
}

std::vector<ConfusionEntry> top_confusions(const CumulativeConfusion& conf,
                                           std::size_t k) {
  if (k == 0) throw ConfigError("top_confusions needs K >= 1");
  std::vector<ConfusionEntry> entries;
  for (std::size_t t = 0; t < conf.categories(); ++t) {
    for (std::size_t q = 0; q < conf.categories(); ++q) {
      if (t != q && conf.at(t, q) > 0) {
        entries.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(q),
                           conf.at(t, q)});
      }
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  if (entries.size() > k) entries.resize(k);
  return entries;
}

}  // namespace imgspace::trace
