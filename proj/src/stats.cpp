// Copyright 2026 The cdpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdpose/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "cdpose/error.hpp"
#include "cdpose/sampler.hpp"

namespace cdpose
{

namespace
{

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(std::string_view line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      return out;
    }
    start = pos + 1;
  }
}

// Pairable-value coincidences over a fixed, sorted category set.
struct Coincidences
{
  std::vector<int> categories;
  // Per unit, k*k contributions.
  std::vector<std::vector<double>> per_unit;
};

Coincidences build_coincidences(std::span<const RatingUnit> units)
{
  std::set<int> cats;
  for (const auto & u : units) {
    if (u.values.size() >= 2) {
      cats.insert(u.values.begin(), u.values.end());
    }
  }
  Coincidences c;
  c.categories.assign(cats.begin(), cats.end());
  const std::size_t k = c.categories.size();
  auto index_of = [&](int v) {
      return static_cast<std::size_t>(
        std::lower_bound(c.categories.begin(), c.categories.end(), v) - c.categories.begin());
    };
  for (const auto & u : units) {
    const std::size_t m = u.values.size();
    if (m < 2) {
      continue;
    }
    std::vector<double> counts(k, 0.0);
    for (int v : u.values) {
      counts[index_of(v)] += 1.0;
    }
    std::vector<double> o(k * k, 0.0);
    const double scale = 1.0 / static_cast<double>(m - 1);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        const double pairs = a == b ? counts[a] * (counts[a] - 1.0) : counts[a] * counts[b];
        o[a * k + b] = pairs * scale;
      }
    }
    c.per_unit.push_back(std::move(o));
  }
  return c;
}

double alpha_from_matrix(std::span<const double> o, std::size_t k, AlphaMetric metric)
{
  std::vector<double> marg(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      marg[a] += o[a * k + b];
    }
  }
  const double n = std::accumulate(marg.begin(), marg.end(), 0.0);

  auto delta2 = [&](std::size_t a, std::size_t b) {
      if (a == b) {
        return 0.0;
      }
      if (metric == AlphaMetric::kNominal) {
        return 1.0;
      }
      const std::size_t lo = std::min(a, b);
      const std::size_t hi = std::max(a, b);
      double s = 0.0;
      for (std::size_t g = lo; g <= hi; ++g) {
        s += marg[g];
      }
      const double d = s - (marg[lo] + marg[hi]) / 2.0;
      return d * d;
    };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) {
        continue;
      }
      const double d = delta2(a, b);
      observed += o[a * k + b] * d;
      expected += marg[a] * marg[b] * d;
    }
  }
  if (expected <= 0.0) {
    // Single category: no disagreement is possible.
    return 1.0;
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

std::size_t pairable_units(std::span<const RatingUnit> units)
{
  return static_cast<std::size_t>(std::count_if(units.begin(), units.end(),
         [](const RatingUnit & u) {return u.values.size() >= 2;}));
}

void require_pairable(std::span<const RatingUnit> units)
{
  if (pairable_units(units) < 2) {
    throw Error(ErrorCode::kInsufficientData,
      "alpha needs at least two images with two or more ratings");
  }
}

}  // namespace

std::string_view to_string(ImageKind kind)
{
  return kind == ImageKind::kAvatar ? "avatar" : "real";
}

ImageKind parse_image_kind(std::string_view name)
{
  if (name == "avatar") {return ImageKind::kAvatar;}
  if (name == "real") {return ImageKind::kReal;}
  throw Error(ErrorCode::kParseError, "unknown image kind '" + std::string(name) + "'");
}

std::string_view to_string(AlphaMetric metric)
{
  return metric == AlphaMetric::kNominal ? "nominal" : "ordinal";
}

AlphaMetric default_metric(TwstrsItem item)
{
  return item == TwstrsItem::kLateralShift ? AlphaMetric::kNominal : AlphaMetric::kOrdinal;
}

void validate_records(std::span<const RatingRecord> records)
{
  std::set<std::tuple<std::string, std::string, TwstrsItem>> seen;
  for (const auto & r : records) {
    if (r.value < 0 || r.value > max_score(r.item)) {
      throw Error(ErrorCode::kOutOfRangeScore,
        fmt::format("{} = {} outside [0, {}] (rater {}, image {})", to_string(r.item), r.value,
        max_score(r.item), r.rater_id, r.image_id));
    }
    if (!seen.emplace(r.rater_id, r.image_id, r.item).second) {
      throw Error(ErrorCode::kDuplicateId,
        fmt::format("duplicate rating: rater {}, image {}, item {}", r.rater_id, r.image_id,
        to_string(r.item)));
    }
  }
}

std::vector<RatingRecord> read_ratings_csv(std::istream & in, std::string_view source)
{
  static constexpr std::string_view kHeader = "rater_id,image_id,image_kind,item,value";
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) {
      continue;
    }
    auto fail = [&](const std::string & why) {
        return Error(ErrorCode::kParseError, fmt::format("{}:{}: {}", source, line_no, why));
      };
    if (!header_seen) {
      if (t != kHeader) {
        throw fail(fmt::format("expected header '{}'", kHeader));
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv(t);
    if (f.size() != 5) {
      throw fail(fmt::format("expected 5 fields, got {}", f.size()));
    }
    RatingRecord r;
    r.rater_id = f[0];
    r.image_id = f[1];
    if (r.rater_id.empty() || r.image_id.empty()) {
      throw fail("empty rater_id or image_id");
    }
    try {
      r.image_kind = parse_image_kind(f[2]);
      r.item = parse_item(f[3]);
    } catch (const Error & e) {
      throw fail(e.what());
    }
    const auto * first = f[4].data();
    const auto * last = first + f[4].size();
    const auto [ptr, ec] = std::from_chars(first, last, r.value);
    if (ec != std::errc() || ptr != last) {
      throw fail("value '" + f[4] + "' is not an integer");
    }
    out.push_back(std::move(r));
  }
  if (!header_seen) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: missing header", source));
  }
  validate_records(out);
  return out;
}

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string());
  }
  return read_ratings_csv(in, path.string());
}

void write_ratings_csv(std::ostream & out, std::span<const RatingRecord> records)
{
  out << "rater_id,image_id,image_kind,item,value\n";
  for (const auto & r : records) {
    out << r.rater_id << ',' << r.image_id << ',' << to_string(r.image_kind) << ','
        << to_string(r.item) << ',' << r.value << '\n';
  }
}

double mean_rating(std::span<const RatingRecord> records, std::string_view image_id, TwstrsItem item)
{
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto & r : records) {
    if (r.item == item && r.image_id == image_id) {
      sum += r.value;
      ++n;
    }
  }
  if (n == 0) {
    throw Error(ErrorCode::kNoRatings,
      fmt::format("no {} ratings for image {}", to_string(item), image_id));
  }
  return sum / static_cast<double>(n);
}

std::map<std::string, double> mean_ratings(std::span<const RatingRecord> records, TwstrsItem item)
{
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto & r : records) {
    if (r.item == item) {
      auto & [sum, n] = acc[r.image_id];
      sum += r.value;
      ++n;
    }
  }
  std::map<std::string, double> out;
  for (const auto & [id, sn] : acc) {
    out.emplace(id, sn.first / static_cast<double>(sn.second));
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pearson_r: sequences differ in length");
  }
  if (x.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "pearson_r needs at least three pairs");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw Error(ErrorCode::kZeroVariance, "pearson_r: a sequence has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ClassificationMetrics::require_tpr() const
{
  if (!tpr) {
    throw Error(ErrorCode::kNoPositives, "TPR undefined: truth has no positives");
  }
  return *tpr;
}

ClassificationMetrics classification_metrics(std::span<const int> pred, std::span<const int> truth)
{
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::kInvalidArgument, "prediction and truth differ in length");
  }
  if (pred.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "classification_metrics needs at least one case");
  }
  ClassificationMetrics m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) {++m.tp;} else if (!p && !t) {++m.tn;} else if (p) {++m.fp;} else {++m.fn;}
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(pred.size());
  if (m.tp + m.fn > 0) {
    m.tpr = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  }
  return m;
}

RatingMatrix RatingMatrix::from_records(
  std::span<const RatingRecord> records, std::optional<ImageKind> kind)
{
  validate_records(records);
  RatingMatrix m;
  for (const auto & r : records) {
    if (!kind || r.image_kind == *kind) {
      m.add(r.image_id, r.rater_id, r.item, r.value);
    }
  }
  return m;
}

void RatingMatrix::add(
  const std::string & image_id, const std::string & rater_id, TwstrsItem item, int value)
{
  if (value < 0 || value > max_score(item)) {
    throw Error(ErrorCode::kOutOfRangeScore,
      fmt::format("{} = {} outside [0, {}]", to_string(item), value, max_score(item)));
  }
  auto [it, inserted] = cells_[item][image_id].emplace(rater_id, value);
  if (!inserted) {
    throw Error(ErrorCode::kDuplicateId,
      fmt::format("duplicate rating: rater {}, image {}, item {}", rater_id, image_id,
      to_string(item)));
  }
}

std::vector<RatingUnit> RatingMatrix::units(TwstrsItem item) const
{
  std::vector<RatingUnit> out;
  const auto it = cells_.find(item);
  if (it == cells_.end()) {
    return out;
  }
  for (const auto & [image, raters] : it->second) {
    RatingUnit u;
    u.image_id = image;
    for (const auto & [rater, value] : raters) {
      u.values.push_back(value);
    }
    out.push_back(std::move(u));
  }
  return out;
}

std::size_t RatingMatrix::rating_count(TwstrsItem item) const
{
  std::size_t n = 0;
  const auto it = cells_.find(item);
  if (it != cells_.end()) {
    for (const auto & [image, raters] : it->second) {
      n += raters.size();
    }
  }
  return n;
}

double krippendorff_alpha(std::span<const RatingUnit> units, AlphaMetric metric)
{
  require_pairable(units);
  const Coincidences c = build_coincidences(units);
  const std::size_t k = c.categories.size();
  std::vector<double> o(k * k, 0.0);
  for (const auto & u : c.per_unit) {
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] += u[i];
    }
  }
  return alpha_from_matrix(o, k, metric);
}

double krippendorff_alpha(const RatingMatrix & m, TwstrsItem item, AlphaMetric metric)
{
  const auto units = m.units(item);
  return krippendorff_alpha(units, metric);
}

double percentile(std::vector<double> values, double p)
{
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "percentile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

AgreementResult bootstrap_alpha_ci(
  std::span<const RatingUnit> units, AlphaMetric metric, std::size_t n_iter, std::uint64_t seed)
{
  if (n_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bootstrap needs at least one iteration");
  }
  AgreementResult res;
  res.alpha = krippendorff_alpha(units, metric);
  res.metric = metric;
  res.n_bootstrap = n_iter;
  res.seed = seed;

  const Coincidences c = build_coincidences(units);
  const std::size_t k = c.categories.size();
  const std::size_t m = c.per_unit.size();
  std::vector<double> alphas(n_iter);
  std::vector<double> o(k * k);
  for (std::size_t it = 0; it < n_iter; ++it) {
    Rng rng(mix_seed(seed, it));
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::fill(o.begin(), o.end(), 0.0);
    for (std::size_t draw = 0; draw < m; ++draw) {
      const auto & u = c.per_unit[pick(rng)];
      for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] += u[i];
      }
    }
    alphas[it] = alpha_from_matrix(o, k, metric);
  }
  res.ci_low = percentile(alphas, 0.025);
  res.ci_high = percentile(std::move(alphas), 0.975);
  return res;
}

AgreementResult bootstrap_alpha_ci(
  const RatingMatrix & m, TwstrsItem item, AlphaMetric metric, std::size_t n_iter,
  std::uint64_t seed)
{
  const auto units = m.units(item);
  return bootstrap_alpha_ci(units, metric, n_iter, seed);
}

}  // namespace cdpose
