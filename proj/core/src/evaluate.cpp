#include "dmsr/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dmsr/errors.hpp"

namespace dmsr {

namespace {

const std::vector<std::string> kMetricNames = {"ndcg_sim", "map_sim", "embed_score",
                                               "category_sim"};

MetricStats mean_std(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(acc / static_cast<double>(values.size()));
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

void MetricReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write report: " + path);
  os << "prompt_id,metric,value\n";
  for (const auto& [prompt, metrics] : per_prompt)
    for (const auto& [metric, value] : metrics)
      os << prompt << "," << metric << "," << fmt(value) << "\n";
  for (const auto& [metric, stats] : aggregate) {
    os << "__aggregate__," << metric << "_mean," << fmt(stats.mean) << "\n";
    os << "__aggregate__," << metric << "_std," << fmt(stats.stddev) << "\n";
  }
}

MetricReport MetricReport::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open report: " + path);
  MetricReport r;
  std::string line;
  std::getline(is, line);
  if (line != "prompt_id,metric,value") throw DataError("bad report header in " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    size_t c1 = line.find(',');
    size_t c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1) throw DataError("bad report row: " + line);
    std::string prompt = line.substr(0, c1);
    std::string metric = line.substr(c1 + 1, c2 - c1 - 1);
    double value = std::stod(line.substr(c2 + 1));
    if (prompt == "__aggregate__") {
      if (metric.size() > 5 && metric.substr(metric.size() - 5) == "_mean")
        r.aggregate[metric.substr(0, metric.size() - 5)].mean = value;
      else if (metric.size() > 4 && metric.substr(metric.size() - 4) == "_std")
        r.aggregate[metric.substr(0, metric.size() - 4)].stddev = value;
    } else {
      r.per_prompt[prompt][metric] = value;
    }
  }
  return r;
}

MetricReport evaluate(const SlateGenerator& generator, const std::vector<Slate>& test,
                      const EmbeddingTable& table, const std::vector<CatalogItem>& catalog,
                      const EvalConfig& config) {
  if (test.empty()) throw DataError("evaluate: empty test split");
  MetricReport report;
  report.k = config.k;
  std::map<std::string, std::vector<double>> per_metric;
  for (const Slate& ref : test) {
    std::vector<std::vector<std::string>> runs = generator(ref, config.samples_per_prompt);
    std::map<std::string, double> avg;
    for (const auto& run : runs) {
      avg["ndcg_sim"] += ndcg_sim(run, ref, table, config.k);
      avg["map_sim"] += map_sim(run, ref, table, config.k);
      avg["embed_score"] += embed_score(run, ref, table);
      avg["category_sim"] += category_sim(run, ref, catalog, config.k);
    }
    for (const std::string& m : kMetricNames) {
      avg[m] /= static_cast<double>(runs.size());
      per_metric[m].push_back(avg[m]);
    }
    report.per_prompt[ref.slate_id] = avg;
  }
  for (const std::string& m : kMetricNames) report.aggregate[m] = mean_std(per_metric[m]);
  return report;
}

SlateGenerator dmsr_generator(const ModelBundle& bundle, const GenerationConfig& config) {
  return [&bundle, config](const Slate& ref, int runs) {
    std::vector<std::vector<std::string>> out;
    for (int r = 0; r < runs; ++r) out.push_back(generate(ref.label, config, bundle, r).items);
    return out;
  };
}

SlateGenerator fixed_slate_generator(std::vector<std::string> slate) {
  return [slate = std::move(slate)](const Slate&, int runs) {
    return std::vector<std::vector<std::string>>(static_cast<size_t>(runs), slate);
  };
}

SlateGenerator oracle_generator() {
  return [](const Slate& ref, int runs) {
    std::vector<std::string> items(ref.items.begin(), ref.items.begin() + ref.true_length);
    return std::vector<std::vector<std::string>>(static_cast<size_t>(runs), items);
  };
}

std::string BenchReport::render_table() const {
  std::ostringstream os;
  os << std::left << std::setw(14) << "method";
  for (const std::string& m :
       {std::string("ndcg_sim"), std::string("map_sim"), std::string("embed_score"),
        std::string("category_sim")})
    os << std::setw(22) << (m + "@" + std::to_string(k));
  os << "\n";
  for (const BenchRow& row : rows) {
    os << std::left << std::setw(14) << row.method;
    for (const std::string& m :
         {std::string("ndcg_sim"), std::string("map_sim"), std::string("embed_score"),
          std::string("category_sim")}) {
      auto it = row.metrics.find(m);
      std::ostringstream cell;
      if (it == row.metrics.end())
        cell << "-";
      else
        cell << std::fixed << std::setprecision(4) << it->second.mean << " (+- "
             << std::setprecision(2) << it->second.stddev << ")";
      os << std::setw(22) << cell.str();
    }
    os << "\n";
  }
  return os.str();
}

void BenchReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write bench report: " + path);
  os << "method,metric,mean,std\n";
  for (const BenchRow& row : rows)
    for (const auto& [metric, stats] : row.metrics)
      os << row.method << "," << metric << "," << fmt(stats.mean) << "," << fmt(stats.stddev)
         << "\n";
}

void write_freshness_csv(const FreshnessResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write freshness grid: " + path);
  os << "run,position,fresh,run_ratio\n";
  for (size_t r = 0; r < result.grid.size(); ++r)
    for (size_t p = 0; p < result.grid[r].size(); ++p)
      os << r << "," << p << "," << result.grid[r][p] << "," << fmt(result.per_run_ratio[r])
         << "\n";
}

void write_exposure_csv(const std::vector<ExposureBucket>& buckets, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write exposure curve: " + path);
  os << "pop_lo,pop_hi,generated_share,reference_share,ratio\n";
  for (const ExposureBucket& b : buckets) {
    os << b.pop_lo << "," << b.pop_hi << "," << fmt(b.generated_share) << ","
       << fmt(b.reference_share) << ",";
    if (b.ratio_defined) os << fmt(b.ratio);
    os << "\n";
  }
}

}  // namespace dmsr
