#include "red/foe/io.hpp"

#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "red/errors.hpp"

namespace red::foe {

using nlohmann::json;

double Annotation::raw_score(int i, int j) const {
  for (const auto& s : scores) {
    if (s.i == i && s.j == j) return s.raw;
  }
  return 1.0;
}

PairScorer Annotation::scorer() const {
  // Copy the sparse triples into a map once; build_forest may probe many
  // pairs per child.
  auto table = std::make_shared<std::map<std::pair<int, int>, double>>();
  for (const auto& s : scores) {
    s.validate();
    (*table)[{s.i, s.j}] = s.raw;
  }
  return [table](int i, int j) {
    auto it = table->find({i, j});
    return it == table->end() ? 1.0 : it->second;
  };
}

void write_annotation(const Annotation& a, std::ostream& out) {
  out << json{{"format", "foe-annotation"}, {"version", 1}}.dump() << '\n';
  for (const auto& e : a.events) {
    out << json{{"type", "event"},
                {"index", e.index},
                {"step", e.step},
                {"span", e.span}}
               .dump()
        << '\n';
  }
  for (const auto& s : a.scores) {
    out << json{{"type", "score"}, {"i", s.i}, {"j", s.j}, {"raw", s.raw}}
               .dump()
        << '\n';
  }
}

Annotation read_annotation(std::istream& in) {
  Annotation a;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed annotation line: ") + e.what(),
                       lineno);
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", "") != "foe-annotation") {
        throw ParseError("missing foe-annotation header", lineno);
      }
      have_header = true;
      continue;
    }
    const std::string type = j.value("type", "");
    try {
      if (type == "event") {
        ErrorEvent e;
        e.index = j.at("index").get<int>();
        e.step = j.at("step").get<std::size_t>();
        e.span = j.value("span", std::string());
        a.events.push_back(std::move(e));
      } else if (type == "score") {
        PairScore s;
        s.i = j.at("i").get<int>();
        s.j = j.at("j").get<int>();
        s.raw = j.at("raw").get<double>();
        s.validate();
        a.scores.push_back(s);
      } else if (type == "table") {
        // Dense upper-triangular table: rows[i-1][j-1], i < j entries used.
        const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          for (std::size_t col = i + 1; col < rows[i].size(); ++col) {
            PairScore s;
            s.i = static_cast<int>(i) + 1;
            s.j = static_cast<int>(col) + 1;
            s.raw = rows[i][col];
            s.validate();
            a.scores.push_back(s);
          }
        }
      } else {
        throw ParseError("unknown annotation record type '" + type + "'",
                         lineno);
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad annotation record: ") + e.what(),
                       lineno);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), lineno);
    } catch (const ScorerError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!have_header) throw ParseError("annotation file is empty", 1);
  validate_events(a.events);
  return a;
}

Annotation read_annotation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open annotation file: " + path);
  return read_annotation(in);
}

void write_forest(const ErrorForest& forest, std::ostream& out) {
  forest.validate();
  out << json{{"format", "foe-forest"},
              {"version", 1},
              {"nodes", forest.size()}}
             .dump()
      << '\n';
  for (std::size_t j = 1; j <= forest.size(); ++j) {
    out << json{{"j", j},
                {"parent", forest.parent[j]},
                {"tree", forest.tree_id[j]},
                {"depth", forest.depth[j]}}
               .dump()
        << '\n';
  }
}

void write_forest_file(const ErrorForest& forest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open forest file for write: " + path);
  write_forest(forest, out);
}

ErrorForest read_forest(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t n = 0;
  ErrorForest forest;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed forest line: ") + e.what(),
                       lineno);
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", "") != "foe-forest") {
        throw ParseError("missing foe-forest header", lineno);
      }
      n = j.at("nodes").get<std::size_t>();
      forest.parent.assign(n + 1, 0);
      forest.tree_id.assign(n + 1, 0);
      forest.depth.assign(n + 1, 0);
      forest.children.assign(n + 1, {});
      have_header = true;
      continue;
    }
    try {
      const std::size_t node = j.at("j").get<std::size_t>();
      if (node < 1 || node > n) throw ParseError("node index out of range",
                                                 lineno);
      forest.parent[node] = j.at("parent").get<int>();
      forest.tree_id[node] = j.at("tree").get<int>();
      forest.depth[node] = j.at("depth").get<int>();
      if (forest.parent[node] != 0) {
        forest.children[static_cast<std::size_t>(forest.parent[node])]
            .push_back(static_cast<int>(node));
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad forest record: ") + e.what(), lineno);
    }
  }
  if (!have_header) throw ParseError("forest file is empty", 1);
  forest.validate();
  return forest;
}

ErrorForest read_forest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open forest file: " + path);
  return read_forest(in);
}

}  // namespace red::foe
