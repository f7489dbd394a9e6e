#include "rul/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace rul {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

double parse_double(std::string_view tok, std::size_t line_no, std::size_t column) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line_no, "column " + std::to_string(column) + ": non-numeric token '" +
                                  std::string(tok) + "'");
  }
  if (!std::isfinite(v)) {
    throw ParseError(line_no, "column " + std::to_string(column) + ": non-finite value");
  }
  return v;
}

int parse_int(std::string_view tok, std::size_t line_no, std::size_t column) {
  // Ids and cycles occasionally appear as "1.0"-style floats in re-exported files.
  const double v = parse_double(tok, line_no, column);
  if (v != std::floor(v) || v < 0 || v > 1e9) {
    throw ParseError(line_no, "column " + std::to_string(column) + ": expected integer, got '" +
                                  std::string(tok) + "'");
  }
  return static_cast<int>(v);
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(text.substr(pos, end - pos), line_no);
    pos = end + 1;
  }
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::vector<EngineTrajectory> parse_trajectory_file(std::string_view text) {
  std::map<int, EngineTrajectory> by_id;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto tokens = split_tokens(line);
    if (tokens.empty()) return;
    if (tokens.size() != kNumColumns) {
      throw ParseError(line_no, "expected " + std::to_string(kNumColumns) + " columns, got " +
                                    std::to_string(tokens.size()));
    }
    CycleRecord rec;
    const int unit = parse_int(tokens[0], line_no, 1);
    rec.cycle = parse_int(tokens[1], line_no, 2);
    if (unit < 1) throw ParseError(line_no, "unit id must be positive");
    for (std::size_t k = 0; k < kNumSettings; ++k)
      rec.settings[k] = parse_double(tokens[2 + k], line_no, 3 + k);
    for (std::size_t k = 0; k < kNumSensors; ++k)
      rec.sensors[k] = parse_double(tokens[2 + kNumSettings + k], line_no, 3 + kNumSettings + k);

    auto& engine = by_id[unit];
    engine.engine_id = unit;
    const int expected = engine.cycles.empty() ? 1 : engine.cycles.back().cycle + 1;
    if (rec.cycle != expected) {
      throw ValidationError("engine " + std::to_string(unit) + ": non-contiguous cycles (line " +
                            std::to_string(line_no) + " has cycle " + std::to_string(rec.cycle) +
                            ", expected " + std::to_string(expected) + ")");
    }
    engine.cycles.push_back(rec);
  });

  std::vector<EngineTrajectory> engines;
  engines.reserve(by_id.size());
  for (auto& [id, engine] : by_id) engines.push_back(std::move(engine));
  return engines;
}

std::string serialize_trajectories(const std::vector<EngineTrajectory>& engines) {
  std::string out;
  for (const auto& engine : engines) {
    for (const auto& rec : engine.cycles) {
      out += std::to_string(engine.engine_id);
      out += ' ';
      out += std::to_string(rec.cycle);
      for (double v : rec.settings) {
        out += ' ';
        append_double(out, v);
      }
      for (double v : rec.sensors) {
        out += ' ';
        append_double(out, v);
      }
      out += '\n';
    }
  }
  return out;
}

RulLabelFile parse_rul_file(std::string_view text) {
  RulLabelFile labels;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const auto tokens = split_tokens(line);
    if (tokens.empty()) return;
    if (tokens.size() != 1) {
      throw ParseError(line_no, "expected one RUL value, got " + std::to_string(tokens.size()));
    }
    int v = 0;
    const auto tok = tokens[0];
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0) {
      throw ParseError(line_no, "expected non-negative integer, got '" + std::string(tok) + "'");
    }
    labels.ruls.push_back(v);
  });
  if (labels.ruls.empty()) throw ValidationError("RUL file contains no labels");
  return labels;
}

LengthStats length_stats(const std::vector<EngineTrajectory>& engines) {
  LengthStats s;
  s.engines = engines.size();
  if (engines.empty()) return s;
  s.min_length = engines.front().length();
  for (const auto& e : engines) {
    s.total_rows += e.length();
    s.min_length = std::min(s.min_length, e.length());
    s.max_length = std::max(s.max_length, e.length());
  }
  return s;
}

DatasetStats dataset_summary(const std::vector<EngineTrajectory>& train,
                             const std::vector<EngineTrajectory>& test, const RulLabelFile& ruls,
                             const Fd001Expectations& expect) {
  DatasetStats stats;
  stats.train = length_stats(train);
  stats.test = length_stats(test);
  stats.label_count = ruls.ruls.size();

  auto flag_count = [&](const char* what, std::size_t got, std::size_t want) {
    if (got != want) {
      stats.flags.push_back(std::string(what) + ": expected " + std::to_string(want) + ", got " +
                            std::to_string(got));
    }
  };
  flag_count("train engines", stats.train.engines, expect.train_engines);
  flag_count("test engines", stats.test.engines, expect.test_engines);
  flag_count("RUL labels", stats.label_count, expect.labels);
  if (stats.label_count != stats.test.engines) {
    stats.flags.push_back("RUL label count " + std::to_string(stats.label_count) +
                          " differs from test engine count " + std::to_string(stats.test.engines));
  }
  if (stats.test.engines > 0 && stats.test.min_length < expect.min_test_length) {
    stats.flags.push_back("shortest test engine has " + std::to_string(stats.test.min_length) +
                          " cycles; fewer than " + std::to_string(expect.min_test_length) +
                          " triggers the short-engine padding policy");
  }
  return stats;
}

nlohmann::json to_json(const DatasetStats& stats) {
  auto lengths = [](const LengthStats& s) {
    return nlohmann::json{{"engines", s.engines},
                          {"total_rows", s.total_rows},
                          {"min_length", s.min_length},
                          {"max_length", s.max_length}};
  };
  return {{"train", lengths(stats.train)},
          {"test", lengths(stats.test)},
          {"label_count", stats.label_count},
          {"flags", stats.flags}};
}

}  // namespace rul
