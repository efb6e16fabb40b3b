#include <algorithm>
#include <fstream>
#include <sstream>

#include "imgspace/errors.hpp"
#include "imgspace/runner.hpp"

namespace imgspace::runner {

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

void render_table(std::ostream& out, const std::string& title,
                  const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  out << title << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out << "  ";
      out << rows[r][c];
      if (c + 1 < rows[r].size()) out << std::string(width[c] - rows[r][c].size(), ' ');
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out << std::string(total ? total - 2 : 0, '-') << '\n';
    }
  }
}

}  // namespace

std::string render_report(const std::filesystem::path& output_dir) {
  const std::pair<const char*, const char*> tables[] = {
      {"metrics.csv", "Test metrics (percent; N per 10,000)"},
      {"adversarial.csv", "Adversarial accuracy (percent)"},
      {"step_mse.csv", "Step-function fits"},
  };
  std::ostringstream out;
  bool any = false;
  for (const auto& [file, title] : tables) {
    std::filesystem::path p = output_dir / file;
    if (!std::filesystem::exists(p)) continue;
    if (any) out << '\n';
    render_table(out, title, read_csv(p));
    any = true;
  }
  if (!any)
    throw LookupError("no report files (metrics.csv, adversarial.csv, step_mse.csv) in " +
                      output_dir.string());
  return out.str();
}

}  // namespace imgspace::runner
