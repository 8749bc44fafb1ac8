#include "ucnn/archive.hpp"

#include <fstream>
#include <iterator>

#include "ucnn/hash.hpp"

namespace ucnn::archive {

using nlohmann::json;

json Provenance::to_json() const {
  return {{"tool_version", tool_version}, {"config_hash", config_hash}, {"seed", seed}, {"fingerprint", fingerprint}};
}

Provenance Provenance::from_json(const json& doc) {
  Provenance p;
  try {
    p.tool_version = doc.at("tool_version").get<std::string>();
    p.config_hash = doc.at("config_hash").get<std::string>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    p.fingerprint = doc.at("fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("provenance: ") + e.what());
  }
  return p;
}

json header_to_json(const ArchiveHeader& h) {
  json doc;
  doc["format"] = "ucnn-scenarios";
  doc["format_version"] = kArchiveFormatVersion;
  doc["provenance"] = h.provenance.to_json();
  doc["first_id"] = h.first_id;
  doc["options"] = h.options;
  return doc;
}

json entry_to_json(const Entry& e) {
  json doc;
  doc["id"] = e.input.id;
  doc["status"] = uc::to_string(e.status);
  doc["input"] = sampling::input_to_json(e.input);
  doc["solution"] = e.solution ? uc::solution_to_json(*e.solution) : json(nullptr);
  return doc;
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("scenario archive not found: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Archive a;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) {
      a.truncated = true;
      break;
    }
    const std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (doc.value("format", "") != "ucnn-scenarios") throw SchemaError(path.string() + " is not a scenario archive");
        if (doc.at("format_version").get<int>() != kArchiveFormatVersion) {
          throw SchemaError(path.string() + ": unsupported archive version");
        }
        a.header.provenance = Provenance::from_json(doc.at("provenance"));
        a.header.first_id = doc.at("first_id").get<std::uint64_t>();
        a.header.options = doc.at("options");
        have_header = true;
      } else {
        Entry e;
        e.input = sampling::input_from_json(doc.at("input"));
        e.status = uc::status_from_string(doc.at("status").get<std::string>());
        if (!doc.at("solution").is_null()) {
          e.solution = std::make_shared<const uc::UcSolution>(uc::solution_from_json(doc.at("solution")));
        }
        a.entries.push_back(std::move(e));
      }
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
    a.valid_bytes = pos;
  }
  if (!have_header) throw SchemaError(path.string() + ": missing archive header");
  return a;
}

std::filesystem::path timings_path(const std::filesystem::path& archive) {
  auto p = archive;
  p += ".timings.jsonl";
  return p;
}

std::vector<proxy::Record> to_records(const grid::GridCase& grid, const Archive& a) {
  if (a.header.provenance.fingerprint != grid::fingerprint(grid)) {
    throw FingerprintError("scenario archive was generated for a different case");
  }
  std::vector<proxy::Record> out;
  for (const auto& e : a.entries) {
    if (!e.labeled()) continue;
    proxy::Record r;
    r.id = e.input.id;
    r.seed = e.input.seed;
    r.month = e.input.month;
    r.features = proxy::featurize(grid, e.input);
    r.cost = e.solution->cost;
    r.solution = e.solution;
    out.push_back(std::move(r));
  }
  return out;
}

std::string hash_json(const json& doc) { return hex64(fnv1a64(doc.dump())); }

}  // namespace ucnn::archive
