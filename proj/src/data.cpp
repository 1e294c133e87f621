#include "coxsvi/data.hpp"

#include "coxsvi/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace coxsvi {

namespace {

void split_line(const std::string& line, std::vector<std::string>& fields) {
  fields.clear();
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      fields.emplace_back(line, pos);
      break;
    }
    fields.emplace_back(line, pos, comma - pos);
    pos = comma + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
    fields.back().pop_back();
}

Real parse_real_field(const std::string& s, Index line_no, const std::string& col) {
  Real v;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError("line " + format_integer(line_no) + ": cannot parse '" + s +
                     "' as a number in column " + col);
  return v;
}

Index parse_index_field(const std::string& s, Index line_no, const std::string& col) {
  Index v;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError("line " + format_integer(line_no) + ": cannot parse '" + s +
                     "' as an integer in column " + col);
  return v;
}

struct ColumnMap {
  int id = -1, start = -1, stop = -1, event = -1;
  std::vector<int> covariates;
  std::vector<std::string> covariate_names;
  int n_header = 0;
};

ColumnMap map_columns(const std::string& header_line, const CsvSchema& schema,
                      std::vector<std::string>* warnings) {
  std::vector<std::string> cols;
  split_line(header_line, cols);
  ColumnMap m;
  m.n_header = static_cast<int>(cols.size());
  auto find = [&](const std::string& name) {
    for (int i = 0; i < static_cast<int>(cols.size()); ++i)
      if (cols[i] == name) return i;
    return -1;
  };
  m.id = find(schema.id);
  m.start = find(schema.start);
  m.stop = find(schema.stop);
  m.event = find(schema.event);
  for (auto [idx, name] : {std::pair{m.id, schema.id},
                           {m.start, schema.start},
                           {m.stop, schema.stop},
                           {m.event, schema.event}})
    if (idx < 0) throw ParseError("header is missing required column '" + name + "'");

  if (schema.covariates.empty()) {
    std::vector<bool> taken(cols.size(), false);
    taken[m.id] = taken[m.start] = taken[m.stop] = taken[m.event] = true;
    for (int i = 0; i < static_cast<int>(cols.size()); ++i)
      if (!taken[i]) {
        m.covariates.push_back(i);
        m.covariate_names.push_back(cols[i]);
      }
  } else {
    std::vector<bool> taken(cols.size(), false);
    taken[m.id] = taken[m.start] = taken[m.stop] = taken[m.event] = true;
    for (const auto& name : schema.covariates) {
      const int i = find(name);
      if (i < 0) throw ParseError("header is missing covariate column '" + name + "'");
      m.covariates.push_back(i);
      m.covariate_names.push_back(name);
      taken[i] = true;
    }
    if (warnings)
      for (int i = 0; i < static_cast<int>(cols.size()); ++i)
        if (!taken[i]) warnings->push_back("ignoring column '" + cols[i] + "'");
  }
  return m;
}

struct RawRow {
  Index id;
  Real start, stop;
  int event;
  std::vector<Real> x;
};

RawRow parse_row(const std::vector<std::string>& fields, const ColumnMap& m,
                 Index line_no) {
  if (static_cast<int>(fields.size()) != m.n_header)
    throw ParseError("line " + format_integer(line_no) + ": expected " +
                     format_integer(m.n_header) + " fields, found " +
                     format_integer(static_cast<Index>(fields.size())));
  RawRow r;
  r.id = parse_index_field(fields[m.id], line_no, "id");
  r.start = parse_real_field(fields[m.start], line_no, "start");
  r.stop = parse_real_field(fields[m.stop], line_no, "stop");
  const Real ev = parse_real_field(fields[m.event], line_no, "event");
  if (ev != Real(0) && ev != Real(1))
    throw ValidationError("line " + format_integer(line_no) +
                          ": event flag must be 0 or 1, found '" + fields[m.event] + "'");
  r.event = static_cast<int>(ev);
  if (!(r.start < r.stop))
    throw ValidationError("line " + format_integer(line_no) + ": interval (" +
                          format_real(r.start) + ", " + format_real(r.stop) +
                          "] is empty or inverted");
  r.x.reserve(m.covariates.size());
  for (std::size_t j = 0; j < m.covariates.size(); ++j)
    r.x.push_back(parse_real_field(fields[m.covariates[j]], line_no,
                                   m.covariate_names[j]));
  return r;
}

Dataset assemble(std::vector<RawRow>&& raw, std::vector<std::string> names) {
  const Index n = static_cast<Index>(raw.size());
  const Index p = static_cast<Index>(names.size());

  // First-appearance order of individuals; regroup if interleaved.
  std::unordered_map<Index, Index> ordinal;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  Index next_ordinal = 0;
  std::vector<Index> row_ordinal(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto [it, inserted] = ordinal.try_emplace(raw[static_cast<std::size_t>(i)].id, next_ordinal);
    if (inserted) ++next_ordinal;
    row_ordinal[static_cast<std::size_t>(i)] = it->second;
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return row_ordinal[static_cast<std::size_t>(a)] < row_ordinal[static_cast<std::size_t>(b)];
  });

  Dataset out;
  out.covariate_names = std::move(names);
  out.rows.id.resize(static_cast<std::size_t>(n));
  out.rows.start.resize(n);
  out.rows.stop.resize(n);
  out.rows.event.resize(n);
  out.rows.x.resize(n, p);
  Index events = 0;
  for (Index i = 0; i < n; ++i) {
    const RawRow& r = raw[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    out.rows.id[static_cast<std::size_t>(i)] = r.id;
    out.rows.start[i] = r.start;
    out.rows.stop[i] = r.stop;
    out.rows.event[i] = r.event;
    for (Index j = 0; j < p; ++j) out.rows.x(i, j) = r.x[static_cast<std::size_t>(j)];
    events += r.event;
  }
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j < n && out.rows.id[static_cast<std::size_t>(j)] ==
                        out.rows.id[static_cast<std::size_t>(i)])
      ++j;
    out.individual_spans.emplace_back(i, j - i);
    i = j;
  }
  out.totals.n_individuals = static_cast<Index>(out.individual_spans.size());
  out.totals.n_observations = n;
  out.totals.total_events = events;
  out.totals.n_covariates = p;
  return out;
}

}  // namespace

ParseReport parse_long_csv(std::istream& in, const CsvSchema& schema) {
  ParseReport report;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input: missing header row");
  const ColumnMap m = map_columns(line, schema, &report.warnings);

  std::vector<RawRow> raw;
  std::vector<std::string> fields;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    split_line(line, fields);
    raw.push_back(parse_row(fields, m, line_no));
  }
  report.dataset = assemble(std::move(raw), m.covariate_names);
  return report;
}

ParseReport parse_long_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_long_csv(in, schema);
}

void write_long_csv(std::ostream& out, const CoxRows& rows,
                    const std::vector<std::string>& covariate_names) {
  const Index p = rows.covariates();
  if (static_cast<Index>(covariate_names.size()) != p)
    throw std::invalid_argument("write_long_csv: covariate name count mismatch");
  out << "id,start,stop,event";
  for (const auto& name : covariate_names) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < rows.rows(); ++i) {
    out << format_integer(rows.id[static_cast<std::size_t>(i)]) << ','
        << format_real(rows.start[i]) << ',' << format_real(rows.stop[i]) << ','
        << rows.event[i];
    for (Index j = 0; j < p; ++j) out << ',' << format_real(rows.x(i, j));
    out << '\n';
  }
}

std::vector<Violation> validate(const Dataset& data) {
  std::vector<Violation> out;
  const CoxRows& r = data.rows;
  auto add = [&](Violation::Code code, Violation::Severity sev, Index ind, Index row,
                 std::string msg) {
    out.push_back({code, sev, ind, row, std::move(msg)});
  };
  for (Index i = 0; i < r.rows(); ++i) {
    const Index id = r.id[static_cast<std::size_t>(i)];
    if (!std::isfinite(r.start[i]) || !std::isfinite(r.stop[i]))
      add(Violation::Code::nonfinite_value, Violation::Severity::error, id, i,
          "non-finite interval endpoint");
    else if (r.start[i] == r.stop[i])
      add(Violation::Code::empty_interval, Violation::Severity::error, id, i,
          "empty interval (" + format_real(r.start[i]) + ", " + format_real(r.stop[i]) + "]");
    else if (r.start[i] > r.stop[i])
      add(Violation::Code::inverted_interval, Violation::Severity::error, id, i,
          "interval with start > stop");
    if (r.event[i] != 0 && r.event[i] != 1)
      add(Violation::Code::bad_event_flag, Violation::Severity::error, id, i,
          "event flag " + format_integer(r.event[i]) + " is not 0 or 1");
    for (Index j = 0; j < r.covariates(); ++j)
      if (!std::isfinite(r.x(i, j))) {
        add(Violation::Code::nonfinite_value, Violation::Severity::error, id, i,
            "non-finite covariate in column " + format_integer(j));
        break;
      }
  }
  for (const auto& [first, count] : data.individual_spans) {
    const Index id = r.id[static_cast<std::size_t>(first)];
    Index n_events = 0;
    Index last_event_row = -1;
    for (Index i = first; i < first + count; ++i) {
      if (i > first) {
        if (r.start[i] < r.stop[i - 1])
          add(Violation::Code::overlapping_intervals, Violation::Severity::error, id, i,
              "interval overlaps the previous one");
        else if (r.start[i] > r.stop[i - 1])
          add(Violation::Code::interval_gap, Violation::Severity::warning, id, i,
              "gap before this interval");
      }
      if (r.event[i] == 1) {
        ++n_events;
        last_event_row = i;
      }
    }
    if (n_events > 1)
      add(Violation::Code::multiple_events, Violation::Severity::error, id, -1,
          "individual has " + format_integer(n_events) + " events");
    else if (n_events == 1 && last_event_row != first + count - 1)
      add(Violation::Code::event_not_last, Violation::Severity::error, id, last_event_row,
          "event is not on the individual's last record");
  }
  return out;
}

CoxRows DataSource::fetch_all() const {
  std::vector<Index> all(static_cast<std::size_t>(totals().n_observations));
  std::iota(all.begin(), all.end(), Index(0));
  return fetch_rows(all);
}

namespace {

CoxRows gather_rows(const CoxRows& src, const std::vector<Index>& idx) {
  CoxRows out;
  const Index n = static_cast<Index>(idx.size());
  out.id.resize(static_cast<std::size_t>(n));
  out.start.resize(n);
  out.stop.resize(n);
  out.event.resize(n);
  out.x.resize(n, src.covariates());
  for (Index i = 0; i < n; ++i) {
    const Index k = idx[static_cast<std::size_t>(i)];
    if (k < 0 || k >= src.rows())
      throw std::invalid_argument("fetch_rows: row index out of range");
    out.id[static_cast<std::size_t>(i)] = src.id[static_cast<std::size_t>(k)];
    out.start[i] = src.start[k];
    out.stop[i] = src.stop[k];
    out.event[i] = src.event[k];
    out.x.row(i) = src.x.row(k);
  }
  return out;
}

}  // namespace

MemoryDataSource::MemoryDataSource(Dataset data) : data_(std::move(data)) {}

CoxRows MemoryDataSource::fetch_rows(const std::vector<Index>& row_indices) const {
  return gather_rows(data_.rows, row_indices);
}

CoxRows MemoryDataSource::fetch_individuals(const std::vector<Index>& ordinals) const {
  std::vector<Index> rows;
  for (const Index ord : ordinals) {
    if (ord < 0 || ord >= static_cast<Index>(data_.individual_spans.size()))
      throw std::invalid_argument("fetch_individuals: ordinal out of range");
    const auto [first, count] = data_.individual_spans[static_cast<std::size_t>(ord)];
    for (Index i = first; i < first + count; ++i) rows.push_back(i);
  }
  return gather_rows(data_.rows, rows);
}

struct CsvFileDataSource::Impl {
  std::string path;
  ColumnMap columns;
  std::vector<std::uint64_t> offsets;       // byte offset of each data row
  std::vector<Index> line_numbers;          // 1-based source line per row
  std::vector<std::vector<Index>> rows_of;  // row indices per individual ordinal
  mutable std::ifstream stream;
};

CsvFileDataSource::CsvFileDataSource(const std::string& path, const CsvSchema& schema)
    : impl_(new Impl) {
  impl_->path = path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input: missing header row");
  impl_->columns = map_columns(line, schema, nullptr);
  names_ = impl_->columns.covariate_names;

  std::unordered_map<Index, Index> ordinal;
  std::vector<std::string> fields;
  Index line_no = 1;
  while (true) {
    const std::streampos pos = in.tellg();
    if (!std::getline(in, line)) break;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    split_line(line, fields);
    const RawRow r = parse_row(fields, impl_->columns, line_no);
    const Index row = static_cast<Index>(impl_->offsets.size());
    impl_->offsets.push_back(static_cast<std::uint64_t>(std::streamoff(pos)));
    impl_->line_numbers.push_back(line_no);
    auto [it, inserted] =
        ordinal.try_emplace(r.id, static_cast<Index>(impl_->rows_of.size()));
    if (inserted) impl_->rows_of.emplace_back();
    impl_->rows_of[static_cast<std::size_t>(it->second)].push_back(row);
    totals_.total_events += r.event;
  }
  totals_.n_observations = static_cast<Index>(impl_->offsets.size());
  totals_.n_individuals = static_cast<Index>(impl_->rows_of.size());
  totals_.n_covariates = static_cast<Index>(names_.size());
  impl_->stream.open(path, std::ios::binary);
}

CsvFileDataSource::~CsvFileDataSource() = default;

CoxRows CsvFileDataSource::fetch_rows(const std::vector<Index>& row_indices) const {
  const Index p = totals_.n_covariates;
  CoxRows out;
  const Index n = static_cast<Index>(row_indices.size());
  out.id.resize(static_cast<std::size_t>(n));
  out.start.resize(n);
  out.stop.resize(n);
  out.event.resize(n);
  out.x.resize(n, p);
  std::string line;
  std::vector<std::string> fields;
  std::ifstream& in = impl_->stream;
  in.clear();
  for (Index i = 0; i < n; ++i) {
    const Index k = row_indices[static_cast<std::size_t>(i)];
    if (k < 0 || k >= totals_.n_observations)
      throw std::invalid_argument("fetch_rows: row index out of range");
    in.seekg(static_cast<std::streamoff>(impl_->offsets[static_cast<std::size_t>(k)]));
    if (!std::getline(in, line))
      throw ParseError("failed to reread row " + format_integer(k) + " of '" +
                       impl_->path + "'");
    split_line(line, fields);
    const RawRow r =
        parse_row(fields, impl_->columns, impl_->line_numbers[static_cast<std::size_t>(k)]);
    out.id[static_cast<std::size_t>(i)] = r.id;
    out.start[i] = r.start;
    out.stop[i] = r.stop;
    out.event[i] = r.event;
    for (Index j = 0; j < p; ++j) out.x(i, j) = r.x[static_cast<std::size_t>(j)];
  }
  return out;
}

CoxRows CsvFileDataSource::fetch_individuals(const std::vector<Index>& ordinals) const {
  std::vector<Index> rows;
  for (const Index ord : ordinals) {
    if (ord < 0 || ord >= totals_.n_individuals)
      throw std::invalid_argument("fetch_individuals: ordinal out of range");
    const auto& r = impl_->rows_of[static_cast<std::size_t>(ord)];
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return fetch_rows(rows);
}

Batch sample_batch(const DataSource& source, BatchMode mode, Index size, Rng& rng) {
  const DatasetTotals& t = source.totals();
  if (t.total_events < 1)
    throw ValidationError("dataset has no events; the partial likelihood is undefined");
  const Index population =
      mode == BatchMode::individuals ? t.n_individuals : t.n_observations;
  if (size < 1 || size > population)
    throw std::invalid_argument("sample_batch: size must be in [1, population]");

  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<Index> picked = sample_without_replacement(population, size, rng);
    CoxRows rows = mode == BatchMode::individuals ? source.fetch_individuals(picked)
                                                  : source.fetch_rows(picked);
    const Index batch_events = rows.event.cast<Index>().sum();
    if (batch_events == 0) continue;
    Batch b;
    b.rows = std::move(rows);
    b.batch_events = batch_events;
    b.event_weight = static_cast<Real>(t.total_events) / static_cast<Real>(batch_events);
    b.risk_weight = static_cast<Real>(population) / static_cast<Real>(size);
    return b;
  }
  throw NumericalError("sample_batch: no batch with at least one event in 1000 draws");
}

}  // namespace coxsvi
