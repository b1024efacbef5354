#include "hybridjump/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "hybridjump/error.hpp"

#ifndef HYBRIDJUMP_VERSION
#define HYBRIDJUMP_VERSION "0.0.0"
#endif

namespace hybridjump {

const char* library_version() { return HYBRIDJUMP_VERSION; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string OutputHeader::comment_line() const {
  return std::string("# hybridjump ") + library_version() + " config_hash=" + hex64(config_hash);
}

nlohmann::json OutputHeader::record() const {
  return {{"type", "header"}, {"library", "hybridjump"}, {"version", library_version()},
          {"config_hash", hex64(config_hash)}};
}

CsvWriter::CsvWriter(std::ostream& os, const OutputHeader& header, std::vector<std::string> columns)
    : os_(os), columns_(std::move(columns)) {
  os_ << header.comment_line() << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
  os_ << '\n';
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (cells.size() != columns_.size())
    throw Error(ErrorCode::InvalidArgument, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                                std::to_string(columns_.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>)
            os_ << format_double(v);
          else
            os_ << v;
        },
        cells[i]);
  }
  os_ << '\n';
}

const char* representation_name(Representation r) {
  switch (r) {
    case Representation::Fictive: return "fictive";
    case Representation::Real: return "real";
    case Representation::Hybrid: return "hybrid";
  }
  return "unknown";
}

namespace {
nlohmann::json vec_json(const Vec& v) {
  auto a = nlohmann::json::array();
  for (double x : v) a.push_back(x);
  return a;
}
}  // namespace

nlohmann::json path_record_json(const PathRecord& p) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : p.events) {
    nlohmann::json j{{"time", e.time}, {"sentinel", e.sentinel}, {"accepted", e.accepted},
                     {"before", vec_json(e.before)}, {"after", vec_json(e.after)}};
    j["mark"] = e.sentinel ? nlohmann::json(nullptr) : nlohmann::json(e.mark);
    j["uniform"] = std::isnan(e.uniform) ? nlohmann::json(nullptr) : nlohmann::json(e.uniform);
    events.push_back(std::move(j));
  }
  return {{"type", "path"},
          {"seed", p.seed},
          {"stream", p.stream},
          {"representation", representation_name(p.representation)},
          {"t0", p.t0},
          {"initial", vec_json(p.initial)},
          {"terminal", vec_json(p.terminal)},
          {"proposals", p.proposals},
          {"accepted", p.accepted},
          {"events", std::move(events)}};
}

void write_paths_jsonl(std::ostream& os, const OutputHeader& header, const std::vector<PathRecord>& paths) {
  os << header.record().dump() << '\n';
  for (const auto& p : paths) os << path_record_json(p).dump() << '\n';
}

}  // namespace hybridjump
