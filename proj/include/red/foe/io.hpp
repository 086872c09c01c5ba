#pragma once

/**
 * Line-delimited annotation and forest files.
 *
 * Annotation files carry the chronological error events for one trace plus
 * pair scores, either as sparse (i, j, raw) triples or as a dense table.
 * Forest files export the computed parent / depth / tree arrays.
 */

#include <iosfwd>
#include <string>
#include <vector>

#include "red/foe/forest.hpp"

namespace red::foe {

struct Annotation {
  std::vector<ErrorEvent> events;
  // Sparse raw scores keyed by (i, j); missing pairs default to 1.0
  // (the floor of the raw scale, never above threshold).
  std::vector<PairScore> scores;

  double raw_score(int i, int j) const;
  PairScorer scorer() const;
};

void write_annotation(const Annotation& a, std::ostream& out);
Annotation read_annotation(std::istream& in);
Annotation read_annotation_file(const std::string& path);

void write_forest(const ErrorForest& forest, std::ostream& out);
void write_forest_file(const ErrorForest& forest, const std::string& path);
ErrorForest read_forest(std::istream& in);
ErrorForest read_forest_file(const std::string& path);

}  // namespace red::foe
