#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rul {

inline constexpr std::size_t kNumSettings = 3;
inline constexpr std::size_t kNumSensors = 21;
inline constexpr std::size_t kNumColumns = 2 + kNumSettings + kNumSensors;

/// Malformed input text; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that breaks a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CycleRecord {
  int cycle = 0;
  std::array<double, kNumSettings> settings{};
  std::array<double, kNumSensors> sensors{};  // sensors[k] is sensor k+1

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct EngineTrajectory {
  int engine_id = 0;
  std::vector<CycleRecord> cycles;

  std::size_t length() const { return cycles.size(); }
  int last_cycle() const { return cycles.back().cycle; }

  friend bool operator==(const EngineTrajectory&, const EngineTrajectory&) = default;
};

struct RulLabelFile {
  std::vector<int> ruls;
};

/// Parses the whitespace-delimited 26-column trajectory format
/// (unit, cycle, setting1..3, sensor1..21). Blank lines are skipped.
std::vector<EngineTrajectory> parse_trajectory_file(std::string_view text);

/// Inverse of parse_trajectory_file using shortest round-trip formatting.
std::string serialize_trajectories(const std::vector<EngineTrajectory>& engines);

RulLabelFile parse_rul_file(std::string_view text);

struct LengthStats {
  std::size_t engines = 0;
  std::size_t total_rows = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
};

LengthStats length_stats(const std::vector<EngineTrajectory>& engines);

struct DatasetStats {
  LengthStats train;
  LengthStats test;
  std::size_t label_count = 0;
  std::vector<std::string> flags;  // FD001 expectation mismatches; empty when all hold
};

/// Expected FD001 shape used for flagging.
struct Fd001Expectations {
  std::size_t train_engines = 100;
  std::size_t test_engines = 100;
  std::size_t labels = 100;
  std::size_t min_test_length = 30;  // trim 10 + window 20
};

DatasetStats dataset_summary(const std::vector<EngineTrajectory>& train,
                             const std::vector<EngineTrajectory>& test, const RulLabelFile& ruls,
                             const Fd001Expectations& expect = {});

nlohmann::json to_json(const DatasetStats& stats);

}  // namespace rul
