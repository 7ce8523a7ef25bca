#pragma once

// Record linkage: raw demographic / exit / incident rows are joined on the
// three-part client key into one profile per individual, with residence
// episodes, total length of stay and the readmission label.

#include <algorithm>
#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "readmit/categories.hpp"
#include "readmit/csv.hpp"
#include "readmit/date.hpp"
#include "readmit/error.hpp"

namespace readmit::cohort {

struct ClientKey {
  std::string cares_id;   // individual
  std::string family_id;  // family
  std::string case_id;    // current case

  friend auto operator<=>(const ClientKey&, const ClientKey&) = default;
};

/// Unique-individual key: the three key parts joined by '|'. A literal '|'
/// inside a part is written "\|" and a literal '\' is written "\\", so
/// distinct triples never collide.
class IdCombo {
 public:
  IdCombo() = default;
  explicit IdCombo(std::string value) : value_(std::move(value)) {}

  const std::string& str() const { return value_; }

  friend auto operator<=>(const IdCombo&, const IdCombo&) = default;

 private:
  std::string value_;
};

inline IdCombo make_id_combo(const ClientKey& key) {
  std::string out;
  auto append = [&](std::string_view name, std::string_view raw) {
    std::string part = csv::trim(raw);
    if (part.empty()) throw Error(ErrorCode::EmptyKeyPart, std::string(name) + " is blank");
    for (char c : part) {
      if (c == '|' || c == '\\') out += '\\';
      out += c;
    }
  };
  append("cares_id", key.cares_id);
  out += '|';
  append("family_id", key.family_id);
  out += '|';
  append("case_id", key.case_id);
  return IdCombo(std::move(out));
}

inline ClientKey normalized(const ClientKey& key) {
  return {csv::trim(key.cares_id), csv::trim(key.family_id), csv::trim(key.case_id)};
}

struct DemographicRecord {
  ClientKey key;
  std::optional<double> age;
  std::string race;
  std::string family_type;
  std::string reason_homeless;
  std::string employment;
  std::string citizenship;
  std::optional<double> income;  // monthly USD
  Date entry_date;
  bool admitted = true;
};

struct ExitRecord {
  ClientKey key;
  Date exit_date;
  std::string exit_reason;
};

struct IncidentRecord {
  ClientKey key;
  Date incident_date;
  std::string incident_type;
};

struct ResidenceEpisode {
  Date entry_date;
  std::optional<Date> exit_date;  // empty while the stay is open
  std::optional<std::string> exit_reason;

  bool closed() const { return exit_date.has_value(); }
  friend bool operator==(const ResidenceEpisode&, const ResidenceEpisode&) = default;
};

struct ClientProfile {
  IdCombo id;
  ClientKey key;
  std::optional<double> age;
  Race race = Race::Other;
  FamilyType family_type = FamilyType::Single;
  ReasonHomeless reason_homeless = ReasonHomeless::Other;
  Employment employment = Employment::Unknown;
  Citizenship citizenship = Citizenship::Unknown;
  std::optional<double> income;
  std::vector<ResidenceEpisode> episodes;  // sorted by entry date
  long total_los_days = 0;                 // closed episodes only
  int incident_count = 0;
  int readmit = 0;

  int code(CategoricalField field) const {
    switch (field) {
      case CategoricalField::Race: return static_cast<int>(race);
      case CategoricalField::FamilyType: return static_cast<int>(family_type);
      case CategoricalField::ReasonHomeless: return static_cast<int>(reason_homeless);
      case CategoricalField::Employment: return static_cast<int>(employment);
      case CategoricalField::Citizenship: return static_cast<int>(citizenship);
    }
    return -1;
  }

  friend bool operator==(const ClientProfile&, const ClientProfile&) = default;
};

/// Sum of episode durations in whole days. Open episodes run until `as_of`.
inline long total_length_of_stay(const std::vector<ResidenceEpisode>& episodes, Date as_of) {
  long total = 0;
  for (const auto& ep : episodes) {
    if (ep.exit_date) {
      total += *ep.exit_date - ep.entry_date;
    } else {
      if (as_of < ep.entry_date)
        throw Error(ErrorCode::AsOfBeforeEntry,
                    "as_of " + as_of.iso() + " precedes open episode entry " + ep.entry_date.iso());
      total += as_of - ep.entry_date;
    }
  }
  return total;
}

inline long closed_length_of_stay(const std::vector<ResidenceEpisode>& episodes) {
  long total = 0;
  for (const auto& ep : episodes)
    if (ep.exit_date) total += *ep.exit_date - ep.entry_date;
  return total;
}

/// 1 for a multi-entry client, 0 for a single entry.
inline int derive_label(const std::vector<ResidenceEpisode>& episodes) {
  if (episodes.empty()) throw Error(ErrorCode::NoEpisodes, "client has no residence episodes");
  return episodes.size() >= 2 ? 1 : 0;
}

struct UnifyResult {
  std::vector<ClientProfile> profiles;  // sorted by IdCombo
  std::vector<std::string> warnings;
  std::size_t removed_not_admitted = 0;
  std::size_t orphan_exits = 0;
  std::size_t orphan_incidents = 0;
};

namespace detail {

struct CanonicalDemographics {
  std::optional<double> age;
  int race, family_type, reason, employment, citizenship;
  std::optional<double> income;
  Date entry_date;

  auto tie() const { return std::tie(entry_date, age, race, family_type, reason, employment, citizenship, income); }
};

inline CanonicalDemographics canonical(const DemographicRecord& r) {
  return {r.age,
          canonicalize(r.race, CategoricalField::Race),
          canonicalize(r.family_type, CategoricalField::FamilyType),
          canonicalize(r.reason_homeless, CategoricalField::ReasonHomeless),
          canonicalize(r.employment, CategoricalField::Employment),
          canonicalize(r.citizenship, CategoricalField::Citizenship),
          r.income,
          r.entry_date};
}

}  // namespace detail

/// Links the three record sets into one profile per admitted individual.
///
/// Non-admitted demographic rows are dropped before linkage. Each remaining
/// entry date is paired with the earliest unused exit on or after it that does
/// not fall after the individual's next entry; unpaired entries stay open.
/// Demographic fields come from the record with the latest entry date and any
/// disagreement with earlier records is reported as a warning. The result does
/// not depend on input row order.
inline UnifyResult unify(const std::vector<DemographicRecord>& demographics, const std::vector<ExitRecord>& exits,
                         const std::vector<IncidentRecord>& incidents) {
  UnifyResult result;

  struct Group {
    ClientKey key;
    std::vector<detail::CanonicalDemographics> entries;
    std::vector<std::pair<Date, std::string>> exits;
    int incidents = 0;
  };
  std::map<IdCombo, Group> groups;

  for (const auto& rec : demographics) {
    if (!rec.admitted) {
      ++result.removed_not_admitted;
      continue;
    }
    IdCombo id = make_id_combo(rec.key);
    auto& g = groups[id];
    g.key = normalized(rec.key);
    g.entries.push_back(detail::canonical(rec));
  }

  std::map<IdCombo, std::size_t> orphan_exit_counts, orphan_incident_counts;
  for (const auto& ex : exits) {
    IdCombo id = make_id_combo(ex.key);
    auto it = groups.find(id);
    if (it == groups.end()) {
      ++orphan_exit_counts[id];
      continue;
    }
    it->second.exits.emplace_back(ex.exit_date, csv::trim(ex.exit_reason));
  }
  for (const auto& inc : incidents) {
    IdCombo id = make_id_combo(inc.key);
    auto it = groups.find(id);
    if (it == groups.end()) {
      ++orphan_incident_counts[id];
      continue;
    }
    ++it->second.incidents;
  }

  if (exits.empty() && !groups.empty()) result.warnings.push_back("no exit records: every episode is open");

  for (auto& [id, g] : groups) {
    std::sort(g.entries.begin(), g.entries.end(), [](const auto& a, const auto& b) { return a.tie() < b.tie(); });
    std::sort(g.exits.begin(), g.exits.end());

    ClientProfile p;
    p.id = id;
    p.key = g.key;
    const auto& latest = g.entries.back();
    p.age = latest.age;
    p.race = static_cast<Race>(latest.race);
    p.family_type = static_cast<FamilyType>(latest.family_type);
    p.reason_homeless = static_cast<ReasonHomeless>(latest.reason);
    p.employment = static_cast<Employment>(latest.employment);
    p.citizenship = static_cast<Citizenship>(latest.citizenship);
    p.income = latest.income;

    std::set<std::string> conflicting;
    for (const auto& e : g.entries) {
      if (e.age != latest.age) conflicting.insert("age");
      if (e.race != latest.race) conflicting.insert("race");
      if (e.family_type != latest.family_type) conflicting.insert("family_type");
      if (e.reason != latest.reason) conflicting.insert("reason_homeless");
      if (e.employment != latest.employment) conflicting.insert("employment");
      if (e.citizenship != latest.citizenship) conflicting.insert("citizenship");
      if (e.income != latest.income) conflicting.insert("income");
    }
    if (!conflicting.empty()) {
      std::string fields;
      for (const auto& f : conflicting) fields += (fields.empty() ? "" : ",") + f;
      result.warnings.push_back("ConflictingDemographics: " + id.str() + ": " + fields + " differ; kept entry of " +
                                latest.entry_date.iso());
    }

    std::size_t next_exit = 0;
    std::size_t unpaired = 0;
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
      const Date entry = g.entries[i].entry_date;
      while (next_exit < g.exits.size() && g.exits[next_exit].first < entry) {
        ++unpaired;
        ++next_exit;
      }
      ResidenceEpisode ep{entry, std::nullopt, std::nullopt};
      const bool last = i + 1 == g.entries.size();
      if (next_exit < g.exits.size() && (last || g.exits[next_exit].first <= g.entries[i + 1].entry_date)) {
        ep.exit_date = g.exits[next_exit].first;
        ep.exit_reason = g.exits[next_exit].second;
        ++next_exit;
      } else if (!last) {
        result.warnings.push_back("open episode followed by re-entry: " + id.str() + " entered " + entry.iso());
      }
      p.episodes.push_back(std::move(ep));
    }
    unpaired += g.exits.size() - next_exit;
    if (unpaired) {
      result.orphan_exits += unpaired;
      result.warnings.push_back("unpaired exit(s): " + id.str() + ": " + std::to_string(unpaired));
    }

    p.total_los_days = closed_length_of_stay(p.episodes);
    p.readmit = derive_label(p.episodes);
    p.incident_count = g.incidents;
    result.profiles.push_back(std::move(p));
  }

  for (const auto& [id, n] : orphan_exit_counts) {
    result.orphan_exits += n;
    result.warnings.push_back("exit(s) without admitted client: " + id.str() + ": " + std::to_string(n));
  }
  for (const auto& [id, n] : orphan_incident_counts) {
    result.orphan_incidents += n;
    result.warnings.push_back("incident(s) without admitted client: " + id.str() + ": " + std::to_string(n));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Raw file schemas

inline constexpr std::array<std::string_view, 12> kDemographicColumns = {
    "cares_id",  "family_id",  "case_id",     "age",    "race",       "family_type",
    "reason_homeless", "employment", "citizenship", "income", "entry_date", "admitted"};
inline constexpr std::array<std::string_view, 5> kExitColumns = {"cares_id", "family_id", "case_id", "exit_date",
                                                                 "exit_reason"};
inline constexpr std::array<std::string_view, 5> kIncidentColumns = {"cares_id", "family_id", "case_id",
                                                                     "incident_date", "incident_type"};

namespace detail {

template <typename Fn>
auto at_line(std::size_t line, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::Io ? ErrorCode::Io : ErrorCode::MalformedCsv,
                "line " + std::to_string(line) + ": " + e.what());
  }
}

inline ClientKey read_key(const csv::Table& t, const csv::Row& row) {
  return {row.fields[t.column("cares_id")], row.fields[t.column("family_id")], row.fields[t.column("case_id")]};
}

inline std::vector<std::string> header_of(std::span<const std::string_view> cols) {
  return {cols.begin(), cols.end()};
}

inline std::string optional_number(const std::optional<double>& v) {
  return v ? csv::format_number(*v) : std::string{};
}

}  // namespace detail

inline std::vector<DemographicRecord> read_demographics(const csv::Table& t) {
  std::vector<DemographicRecord> out;
  if (t.header.empty()) return out;
  for (auto c : kDemographicColumns) t.column(c);
  for (const auto& row : t.rows) {
    out.push_back(detail::at_line(row.line, [&] {
      DemographicRecord r;
      r.key = detail::read_key(t, row);
      make_id_combo(r.key);
      r.age = csv::parse_number(row.fields[t.column("age")]);
      if (r.age && (*r.age < 0 || *r.age > 120))
        throw Error(ErrorCode::InvalidArgument, "age out of range [0,120]: " + csv::format_number(*r.age));
      r.race = row.fields[t.column("race")];
      r.family_type = row.fields[t.column("family_type")];
      r.reason_homeless = row.fields[t.column("reason_homeless")];
      r.employment = row.fields[t.column("employment")];
      r.citizenship = row.fields[t.column("citizenship")];
      r.income = csv::parse_number(row.fields[t.column("income")]);
      r.entry_date = Date::parse(csv::trim(row.fields[t.column("entry_date")]));
      const std::string admitted = csv::lower(csv::trim(row.fields[t.column("admitted")]));
      if (admitted != "true" && admitted != "false")
        throw Error(ErrorCode::InvalidArgument, "admitted must be true or false, got '" + admitted + "'");
      r.admitted = admitted == "true";
      return r;
    }));
  }
  return out;
}

inline std::vector<ExitRecord> read_exits(const csv::Table& t) {
  std::vector<ExitRecord> out;
  if (t.header.empty()) return out;
  for (auto c : kExitColumns) t.column(c);
  for (const auto& row : t.rows) {
    out.push_back(detail::at_line(row.line, [&] {
      ExitRecord r{detail::read_key(t, row), Date::parse(csv::trim(row.fields[t.column("exit_date")])),
                   row.fields[t.column("exit_reason")]};
      make_id_combo(r.key);
      return r;
    }));
  }
  return out;
}

inline std::vector<IncidentRecord> read_incidents(const csv::Table& t) {
  std::vector<IncidentRecord> out;
  if (t.header.empty()) return out;
  for (auto c : kIncidentColumns) t.column(c);
  for (const auto& row : t.rows) {
    out.push_back(detail::at_line(row.line, [&] {
      IncidentRecord r{detail::read_key(t, row), Date::parse(csv::trim(row.fields[t.column("incident_date")])),
                       row.fields[t.column("incident_type")]};
      make_id_combo(r.key);
      return r;
    }));
  }
  return out;
}

inline std::string write_demographics(const std::vector<DemographicRecord>& records) {
  std::ostringstream os;
  csv::write_row(os, detail::header_of(kDemographicColumns));
  for (const auto& r : records)
    csv::write_row(os, {r.key.cares_id, r.key.family_id, r.key.case_id, detail::optional_number(r.age), r.race,
                        r.family_type, r.reason_homeless, r.employment, r.citizenship,
                        detail::optional_number(r.income), r.entry_date.iso(), r.admitted ? "true" : "false"});
  return os.str();
}

inline std::string write_exits(const std::vector<ExitRecord>& records) {
  std::ostringstream os;
  csv::write_row(os, detail::header_of(kExitColumns));
  for (const auto& r : records)
    csv::write_row(os, {r.key.cares_id, r.key.family_id, r.key.case_id, r.exit_date.iso(), r.exit_reason});
  return os.str();
}

inline std::string write_incidents(const std::vector<IncidentRecord>& records) {
  std::ostringstream os;
  csv::write_row(os, detail::header_of(kIncidentColumns));
  for (const auto& r : records)
    csv::write_row(os, {r.key.cares_id, r.key.family_id, r.key.case_id, r.incident_date.iso(), r.incident_type});
  return os.str();
}

// ---------------------------------------------------------------------------
// profiles.csv
//
//   episodes      entry/exit pairs joined by ';' ("2015-01-01/2015-01-31");
//                 an open episode has nothing after the '/'
//   exit_reasons  one component per episode joined by ';', with '\' and ';'
//                 backslash-escaped; empty for open episodes

inline constexpr std::array<std::string_view, 17> kProfileColumns = {
    "id_combo",   "cares_id",    "family_id", "case_id",      "age",        "race",
    "family_type", "reason_homeless", "employment", "citizenship", "income", "episodes",
    "exit_reasons", "n_episodes", "total_los_days", "incident_count", "readmit"};

inline std::string write_profiles(const std::vector<ClientProfile>& profiles) {
  std::ostringstream os;
  csv::write_row(os, detail::header_of(kProfileColumns));
  for (const auto& p : profiles) {
    std::string episodes, reasons;
    for (std::size_t i = 0; i < p.episodes.size(); ++i) {
      const auto& ep = p.episodes[i];
      if (i) {
        episodes += ';';
        reasons += ';';
      }
      episodes += ep.entry_date.iso() + "/" + (ep.exit_date ? ep.exit_date->iso() : std::string{});
      for (char c : ep.exit_reason.value_or("")) {
        if (c == ';' || c == '\\') reasons += '\\';
        reasons += c;
      }
    }
    csv::write_row(os, {p.id.str(), p.key.cares_id, p.key.family_id, p.key.case_id, detail::optional_number(p.age),
                        std::to_string(static_cast<int>(p.race)), std::to_string(static_cast<int>(p.family_type)),
                        std::to_string(static_cast<int>(p.reason_homeless)),
                        std::to_string(static_cast<int>(p.employment)),
                        std::to_string(static_cast<int>(p.citizenship)), detail::optional_number(p.income),
                        episodes, reasons, std::to_string(p.episodes.size()), std::to_string(p.total_los_days),
                        std::to_string(p.incident_count), std::to_string(p.readmit)});
  }
  return os.str();
}

inline std::vector<ClientProfile> read_profiles(const csv::Table& t) {
  for (auto c : kProfileColumns) t.column(c);
  std::vector<ClientProfile> out;
  for (const auto& row : t.rows) {
    out.push_back(detail::at_line(row.line, [&] {
      auto field = [&](std::string_view name) -> const std::string& { return row.fields[t.column(name)]; };
      auto integer = [&](std::string_view name) {
        auto v = csv::parse_number(field(name));
        if (!v || *v != static_cast<long>(*v))
          throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be an integer");
        return static_cast<long>(*v);
      };
      auto code = [&](CategoricalField f) {
        long c = integer(field_name(f));
        category_label(f, static_cast<int>(c));
        return static_cast<int>(c);
      };
      ClientProfile p;
      p.key = {field("cares_id"), field("family_id"), field("case_id")};
      p.id = make_id_combo(p.key);
      if (p.id.str() != field("id_combo"))
        throw Error(ErrorCode::InvalidArgument, "id_combo does not match key parts: '" + field("id_combo") + "'");
      p.age = csv::parse_number(field("age"));
      p.race = static_cast<Race>(code(CategoricalField::Race));
      p.family_type = static_cast<FamilyType>(code(CategoricalField::FamilyType));
      p.reason_homeless = static_cast<ReasonHomeless>(code(CategoricalField::ReasonHomeless));
      p.employment = static_cast<Employment>(code(CategoricalField::Employment));
      p.citizenship = static_cast<Citizenship>(code(CategoricalField::Citizenship));
      p.income = csv::parse_number(field("income"));

      std::vector<std::string> reasons(1);
      const std::string& raw = field("exit_reasons");
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 1 < raw.size()) {
          reasons.back() += raw[++i];
        } else if (raw[i] == ';') {
          reasons.emplace_back();
        } else {
          reasons.back() += raw[i];
        }
      }
      std::stringstream eps(field("episodes"));
      std::string item;
      while (std::getline(eps, item, ';')) {
        auto slash = item.find('/');
        if (slash == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad episode '" + item + "'");
        ResidenceEpisode ep{Date::parse(item.substr(0, slash)), std::nullopt, std::nullopt};
        if (slash + 1 < item.size()) ep.exit_date = Date::parse(item.substr(slash + 1));
        p.episodes.push_back(std::move(ep));
      }
      if (p.episodes.size() != reasons.size() || static_cast<long>(p.episodes.size()) != integer("n_episodes"))
        throw Error(ErrorCode::InvalidArgument, "episode count mismatch");
      for (std::size_t i = 0; i < p.episodes.size(); ++i)
        if (p.episodes[i].closed()) p.episodes[i].exit_reason = reasons[i];
      p.total_los_days = integer("total_los_days");
      p.incident_count = static_cast<int>(integer("incident_count"));
      p.readmit = static_cast<int>(integer("readmit"));
      if (p.readmit != derive_label(p.episodes))
        throw Error(ErrorCode::InvalidArgument, "readmit disagrees with episode count");
      return p;
    }));
  }
  return out;
}

}  // namespace readmit::cohort
