#include "vlanet/data_io.hpp"
#include "vlanet/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace vlanet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path resolve(const fs::path& root, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : root / p;
}

Interval parse_interval(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw DataError(where + ": gt must be [start, end] integers");
  }
  Interval iv{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
  if (!iv.valid()) throw DataError(where + ": malformed interval " + iv.str());
  return iv;
}

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw DataError(where + ": inline tokens must be a non-empty array of rows");
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw DataError(where + ": ragged inline token rows");
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

}  // namespace

void write_features(const fs::path& path, const Matrix& features) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw FormatError("write_features: empty matrix " + shape_of(features).str());
  }
  std::string buf(kFeatureMagic, 4);
  put_u32(buf, kFeatureVersion);
  put_u32(buf, static_cast<std::uint32_t>(features.rows()));
  put_u32(buf, static_cast<std::uint32_t>(features.cols()));
  buf.reserve(kFeatureHeaderBytes + 4 * static_cast<std::size_t>(features.size()));
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(features.data()[i])));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

Matrix load_features(const fs::path& path) {
  const std::string buf = read_file(path);
  const std::string where = "feature file '" + path.string() + "'";
  if (buf.size() < kFeatureHeaderBytes) {
    throw FormatError(where + ": truncated header (" + std::to_string(buf.size()) + " of " +
                      std::to_string(kFeatureHeaderBytes) + " bytes)");
  }
  if (std::memcmp(buf.data(), kFeatureMagic, 4) != 0) throw FormatError(where + ": bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kFeatureVersion) {
    throw FormatError(where + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = get_u32(p + 8);
  const std::uint32_t cols = get_u32(p + 12);
  if (rows == 0 || cols == 0) {
    throw FormatError(where + ": header declares " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  const std::size_t expected = kFeatureHeaderBytes + 4ull * rows * cols;
  if (buf.size() != expected) {
    throw FormatError(where + ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(buf.size()));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = std::bit_cast<float>(get_u32(p + kFeatureHeaderBytes + 4 * i));
  }
  return m;
}

std::string to_string(DatasetMode mode) {
  return mode == DatasetMode::kFrameGrid ? "frame-grid" : "segment-units";
}

DatasetMode parse_dataset_mode(const std::string& text) {
  if (text == "frame-grid") return DatasetMode::kFrameGrid;
  if (text == "segment-units") return DatasetMode::kSegmentUnits;
  throw DataError("unknown dataset mode '" + text + "'");
}

const VideoEntry& Manifest::video(const std::string& id) const {
  for (const VideoEntry& v : videos) {
    if (v.id == id) return v;
  }
  throw DataError("unknown video id '" + id + "'");
}

const QueryEntry& Manifest::query(const std::string& id) const {
  for (const QueryEntry& q : queries) {
    if (q.id == id) return q;
  }
  throw DataError("unknown query id '" + id + "'");
}

void validate_manifest(const Manifest& m) {
  std::map<std::string, std::int64_t> lengths;
  for (const VideoEntry& v : m.videos) {
    if (v.id.empty()) throw DataError("video with empty id");
    if (v.length < 1) throw DataError("video '" + v.id + "' has non-positive length");
    if (!lengths.emplace(v.id, v.length).second) throw DataError("duplicate video id '" + v.id + "'");
  }
  std::set<std::string> query_ids;
  for (const QueryEntry& q : m.queries) {
    if (!query_ids.insert(q.id).second) throw DataError("duplicate query id '" + q.id + "'");
    if (q.tokens.empty() && !q.inline_tokens) {
      throw DataError("query '" + q.id + "' has neither a token file nor inline tokens");
    }
  }
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    const PairEntry& p = m.pairs[i];
    const std::string where = "pair " + std::to_string(i);
    auto it = lengths.find(p.video);
    if (it == lengths.end()) throw DataError(where + " references unknown video id '" + p.video + "'");
    if (!query_ids.contains(p.query)) {
      throw DataError(where + " references unknown query id '" + p.query + "'");
    }
    if (p.gt) {
      if (!p.gt->valid()) throw DataError(where + ": malformed interval " + p.gt->str());
      if (p.gt->end > it->second) {
        throw DataError(where + ": gt " + p.gt->str() + " beyond video length " +
                        std::to_string(it->second));
      }
    }
  }
  if (m.grid) {
    if (m.grid->stride < 1 || m.grid->windows.empty()) {
      throw DataError("grid hint needs stride >= 1 and at least one window");
    }
  }
}

Manifest parse_manifest(const std::string& text, const fs::path& root) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  Manifest m;
  m.root = root;
  try {
    m.name = j.value("name", std::string("unnamed"));
    m.mode = parse_dataset_mode(j.value("mode", std::string("frame-grid")));
    if (j.contains("grid")) {
      GridHint hint;
      hint.stride = j.at("grid").at("stride").get<std::int64_t>();
      hint.windows = j.at("grid").at("windows").get<std::vector<std::int64_t>>();
      m.grid = hint;
    }
    for (const json& v : j.at("videos")) {
      m.videos.push_back({v.at("id").get<std::string>(), v.at("length").get<std::int64_t>(),
                          v.at("features").get<std::string>()});
    }
    for (const json& q : j.at("queries")) {
      QueryEntry e;
      e.id = q.at("id").get<std::string>();
      e.tokens = q.value("tokens", std::string());
      e.text = q.value("text", std::string());
      if (q.contains("inline")) e.inline_tokens = parse_matrix(q.at("inline"), "query '" + e.id + "'");
      m.queries.push_back(std::move(e));
    }
    for (const json& p : j.at("pairs")) {
      PairEntry e;
      e.video = p.at("video").get<std::string>();
      e.query = p.at("query").get<std::string>();
      e.split = p.value("split", std::string("train"));
      if (p.contains("gt") && !p.at("gt").is_null()) {
        e.gt = parse_interval(p.at("gt"), "pair " + e.video + "/" + e.query);
      }
      m.pairs.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

Manifest load_manifest(const fs::path& path) {
  fs::path root = path.parent_path();
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') root = env;
  return parse_manifest(read_file(path), root);
}

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["name"] = m.name;
  j["mode"] = to_string(m.mode);
  if (m.grid) j["grid"] = {{"stride", m.grid->stride}, {"windows", m.grid->windows}};
  j["videos"] = json::array();
  for (const VideoEntry& v : m.videos) {
    j["videos"].push_back({{"id", v.id}, {"length", v.length}, {"features", v.features}});
  }
  j["queries"] = json::array();
  for (const QueryEntry& q : m.queries) {
    json e{{"id", q.id}};
    if (!q.tokens.empty()) e["tokens"] = q.tokens;
    if (!q.text.empty()) e["text"] = q.text;
    if (q.inline_tokens) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < q.inline_tokens->rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < q.inline_tokens->cols(); ++c) row.push_back((*q.inline_tokens)(r, c));
        rows.push_back(std::move(row));
      }
      e["inline"] = std::move(rows);
    }
    j["queries"].push_back(std::move(e));
  }
  j["pairs"] = json::array();
  for (const PairEntry& p : m.pairs) {
    json e{{"video", p.video}, {"query", p.query}, {"split", p.split}};
    if (p.gt) e["gt"] = {p.gt->start, p.gt->end};
    j["pairs"].push_back(std::move(e));
  }
  return j.dump(1) + "\n";
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << manifest_to_json(manifest);
}

const Matrix& FeatureStore::video(const std::string& id) const {
  auto it = frames.find(id);
  if (it == frames.end()) throw DataError("no features for video '" + id + "'");
  return it->second;
}

const Matrix& FeatureStore::query(const std::string& id) const {
  auto it = tokens.find(id);
  if (it == tokens.end()) throw DataError("no tokens for query '" + id + "'");
  return it->second;
}

FeatureStore load_feature_store(const Manifest& m) {
  FeatureStore store;
  store.mode = m.mode;
  Eigen::Index frame_dim = -1;
  for (const VideoEntry& v : m.videos) {
    Matrix f = load_features(resolve(m.root, v.features));
    if (f.rows() != v.length) {
      throw DataError("video '" + v.id + "': feature rows " + std::to_string(f.rows()) +
                      " do not match declared length " + std::to_string(v.length));
    }
    if (frame_dim >= 0 && f.cols() != frame_dim) {
      throw DataError("video '" + v.id + "': feature dim " + std::to_string(f.cols()) +
                      " differs from " + std::to_string(frame_dim));
    }
    frame_dim = f.cols();
    store.frames.emplace(v.id, std::move(f));
  }
  Eigen::Index token_dim = -1;
  for (const QueryEntry& q : m.queries) {
    Matrix t = q.inline_tokens ? *q.inline_tokens : load_features(resolve(m.root, q.tokens));
    if (token_dim >= 0 && t.cols() != token_dim) {
      throw DataError("query '" + q.id + "': token dim " + std::to_string(t.cols()) +
                      " differs from " + std::to_string(token_dim));
    }
    token_dim = t.cols();
    store.tokens.emplace(q.id, std::move(t));
  }
  return store;
}

}  // namespace vlanet
