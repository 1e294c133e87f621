#pragma once

// Counting-process survival data in long format. Each record is one
// interval (start, stop] of one individual with the covariate values in
// force over that interval and a flag marking whether the individual's
// event happened at `stop`. Datasets keep records grouped by individual;
// batches are uniform subsamples carrying the reweighting factors that
// make the subsample log likelihood comparable to the full-data one.

#include "coxsvi/random.hpp"
#include "coxsvi/types.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace coxsvi {

struct DatasetTotals {
  Index n_individuals = 0;
  Index n_observations = 0;
  Index total_events = 0;
  Index n_covariates = 0;
};

// Columnar record storage; row i is one interval of individual id[i].
struct CoxRows {
  std::vector<Index> id;
  Vector start;
  Vector stop;
  IntVector event;
  Matrix x;  // n_rows by n_covariates

  Index rows() const { return static_cast<Index>(id.size()); }
  Index covariates() const { return x.cols(); }
};

enum class BatchMode { individuals, observations };

// Uniform subsample plus the two reweighting factors. event_weight is the
// ratio of population events to batch events; risk_weight is the ratio of
// population sampling units to batch sampling units (individuals or
// observations depending on the mode used to draw the batch).
struct Batch {
  CoxRows rows;
  Real event_weight = 1;
  Real risk_weight = 1;
  Index batch_events = 0;
};

struct CsvSchema {
  std::string id = "id";
  std::string start = "start";
  std::string stop = "stop";
  std::string event = "event";
  // Covariate columns in order; empty means every remaining header column.
  std::vector<std::string> covariates;
};

struct Dataset {
  CoxRows rows;  // grouped by individual in first-appearance order
  std::vector<std::string> covariate_names;
  DatasetTotals totals;
  // Half-open row range [first, first + count) per individual, in the same
  // order individuals first appear in rows.id.
  std::vector<std::pair<Index, Index>> individual_spans;
};

struct ParseReport {
  Dataset dataset;
  std::vector<std::string> warnings;
};

// One-pass CSV reader. Throws ParseError (malformed line, bad number,
// wrong column count) or ValidationError (start >= stop, event flag not
// 0/1), both with the offending 1-based line number. Rows of one
// individual need not be contiguous in the file; the result regroups them
// preserving first-appearance order. Columns outside the schema are
// ignored with a warning.
ParseReport parse_long_csv(std::istream& in, const CsvSchema& schema = {});
ParseReport parse_long_csv_file(const std::string& path, const CsvSchema& schema = {});

// Writes header id,start,stop,event,<names> and one row per record using
// round-trip-exact number formatting.
void write_long_csv(std::ostream& out, const CoxRows& rows,
                    const std::vector<std::string>& covariate_names);

struct Violation {
  enum class Code {
    inverted_interval,
    empty_interval,
    bad_event_flag,
    nonfinite_value,
    overlapping_intervals,
    interval_gap,
    multiple_events,
    event_not_last
  };
  enum class Severity { error, warning };
  Code code;
  Severity severity;
  Index individual;  // -1 when not tied to one individual
  Index row;         // dataset row index, -1 when spanning rows
  std::string message;
};

// Structural checks on a full dataset: intervals must be non-empty and
// consecutive intervals of an individual contiguous (gaps are warnings,
// overlaps errors); at most one event per individual and only on its last
// record. Returns every violation found, empty when clean.
std::vector<Violation> validate(const Dataset& data);

// Read access used by the samplers: either the in-memory dataset or a CSV
// file indexed by byte offset so only fetched rows are materialized.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual const DatasetTotals& totals() const = 0;
  virtual const std::vector<std::string>& covariate_names() const = 0;
  // Row indices must be in [0, n_observations); duplicates allowed.
  virtual CoxRows fetch_rows(const std::vector<Index>& row_indices) const = 0;
  // Ordinals index individuals in first-appearance order; every record of
  // each requested individual is returned.
  virtual CoxRows fetch_individuals(const std::vector<Index>& ordinals) const = 0;
  CoxRows fetch_all() const;
};

class MemoryDataSource : public DataSource {
 public:
  explicit MemoryDataSource(Dataset data);
  const DatasetTotals& totals() const override { return data_.totals; }
  const std::vector<std::string>& covariate_names() const override {
    return data_.covariate_names;
  }
  CoxRows fetch_rows(const std::vector<Index>& row_indices) const override;
  CoxRows fetch_individuals(const std::vector<Index>& ordinals) const override;
  const Dataset& dataset() const { return data_; }

 private:
  Dataset data_;
};

// Scans the file once to build a row offset index plus per-individual row
// lists; fetches seek and parse only the requested lines. A fetch is not
// thread safe on a shared instance.
class CsvFileDataSource : public DataSource {
 public:
  explicit CsvFileDataSource(const std::string& path, const CsvSchema& schema = {});
  ~CsvFileDataSource() override;
  const DatasetTotals& totals() const override { return totals_; }
  const std::vector<std::string>& covariate_names() const override { return names_; }
  CoxRows fetch_rows(const std::vector<Index>& row_indices) const override;
  CoxRows fetch_individuals(const std::vector<Index>& ordinals) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  DatasetTotals totals_;
  std::vector<std::string> names_;
};

// Uniform batch without replacement. Individual mode samples `size`
// individuals and keeps all their records; observation mode samples `size`
// records directly, which may split an individual's history (risk sets are
// then formed among batch rows only). Batches with zero events are
// rejected and redrawn, up to 1000 attempts. event_weight is the correctly
// rounded ratio total_events / batch_events, so multiplying back by
// batch_events recovers total_events after rounding to integer. A double
// with an exact product does not always exist: no neighbor of 15/11 times
// 11 lands on 15.
Batch sample_batch(const DataSource& source, BatchMode mode, Index size, Rng& rng);

}  // namespace coxsvi
