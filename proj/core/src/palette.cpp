#include "colorrec/palette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "colorrec/error.hpp"
#include "colorrec/random.hpp"

namespace colorrec {

namespace {

double sq_dist(const LabColor& x, const LabColor& y) {
  const double dl = x.l - y.l, da = x.a - y.a, db = x.b - y.b;
  return dl * dl + da * da + db * db;
}

bool lab_less(const LabColor& x, const LabColor& y) {
  if (x.l != y.l) return x.l < y.l;
  if (x.a != y.a) return x.a < y.a;
  return x.b < y.b;
}

std::size_t nearest(const LabColor& p, std::span<const LabColor> centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = sq_dist(p, centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

std::size_t sample_weighted(Rng& rng, std::span<const double> w, double total) {
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  // Rounding fallthrough: last index with positive mass.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0) return i;
  }
  return 0;
}

std::vector<LabColor> seed_plus_plus(std::span<const WeightedLab> pts, std::size_t k, Rng& rng) {
  std::vector<LabColor> centers;
  std::vector<double> mass(pts.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) total += mass[i] = pts[i].weight;
  centers.push_back(pts[sample_weighted(rng, mass, total)].color);

  std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts[i].color, centers.back()));
      mass[i] = pts[i].weight * d2[i];
      total += mass[i];
    }
    if (total <= 0.0) break;
    centers.push_back(pts[sample_weighted(rng, mass, total)].color);
  }
  return centers;
}

struct Run {
  std::vector<LabColor> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> history;
  double inertia = 0.0;
  int iterations = 0;
};

Run lloyd(std::span<const WeightedLab> pts, std::vector<LabColor> centroids,
          const KMeansOptions& opts) {
  Run run;
  const std::size_t k = centroids.size();
  std::vector<std::size_t> assign(pts.size());
  std::vector<double> dist(pts.size());
  for (int it = 0; it < opts.max_iterations; ++it) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      assign[i] = nearest(pts[i].color, centroids, &dist[i]);
      inertia += pts[i].weight * dist[i];
    }
    run.history.push_back(inertia);
    run.iterations = it + 1;

    std::vector<LabColor> sums(k);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = assign[i];
      const double w = pts[i].weight;
      sums[c].l += w * pts[i].color.l;
      sums[c].a += w * pts[i].color.a;
      sums[c].b += w * pts[i].color.b;
      mass[c] += w;
    }
    double shift = 0.0;
    std::vector<bool> taken(pts.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      LabColor next;
      if (mass[c] > 0.0) {
        next = {sums[c].l / mass[c], sums[c].a / mass[c], sums[c].b / mass[c]};
      } else {
        // Empty cluster: move it onto the point contributing most inertia.
        std::size_t far = 0;
        double far_cost = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double cost = pts[i].weight * dist[i];
          if (!taken[i] && cost > far_cost) {
            far_cost = cost;
            far = i;
          }
        }
        taken[far] = true;
        dist[far] = 0.0;
        next = pts[far].color;
      }
      shift = std::max(shift, std::sqrt(sq_dist(next, centroids[c])));
      centroids[c] = next;
    }
    if (shift < opts.tolerance) break;
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    assign[i] = nearest(pts[i].color, centroids, &dist[i]);
    inertia += pts[i].weight * dist[i];
  }
  run.centroids = std::move(centroids);
  run.assignment = std::move(assign);
  run.inertia = inertia;
  return run;
}

}  // namespace

double kmeans_inertia(std::span<const WeightedLab> points, std::span<const LabColor> centroids) {
  double total = 0.0;
  for (const auto& p : points) {
    double d;
    nearest(p.color, centroids, &d);
    total += p.weight * d;
  }
  return total;
}

KMeansResult kmeans_weighted(std::span<const WeightedLab> points, std::size_t k,
                             std::uint64_t seed, const KMeansOptions& opts) {
  if (points.empty()) throw Error(ErrorCode::invalid_argument, "k-means needs at least one point");
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be at least 1");
  for (const auto& p : points) {
    if (!(p.weight > 0.0)) throw Error(ErrorCode::invalid_argument, "point weights must be positive");
  }
  std::vector<LabColor> distinct;
  for (const auto& p : points) distinct.push_back(p.color);
  std::sort(distinct.begin(), distinct.end(), lab_less);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  k = std::min(k, distinct.size());

  Rng rng(seed);
  Run best;
  bool have_best = false;
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Run run = lloyd(points, seed_plus_plus(points, k, rng), opts);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }

  const double total = std::accumulate(points.begin(), points.end(), 0.0,
                                       [](double s, const WeightedLab& p) { return s + p.weight; });
  std::vector<double> mass(best.centroids.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) mass[best.assignment[i]] += points[i].weight;

  std::vector<std::size_t> order(best.centroids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (mass[x] != mass[y]) return mass[x] > mass[y];
    return lab_less(best.centroids[x], best.centroids[y]);
  });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  KMeansResult out;
  for (std::size_t c : order) {
    if (mass[c] <= 0.0) continue;
    out.centroids.push_back(best.centroids[c]);
    out.weights.push_back(mass[c] / total);
  }
  out.assignment.reserve(points.size());
  for (std::size_t a : best.assignment) out.assignment.push_back(rank[a]);
  out.inertia = best.inertia;
  out.inertia_history = std::move(best.history);
  out.iterations = best.iterations;
  return out;
}

KMeansResult kmeans_lab(std::span<const LabColor> points, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& opts) {
  std::vector<WeightedLab> weighted;
  weighted.reserve(points.size());
  for (const auto& p : points) weighted.push_back({p, 1.0});
  return kmeans_weighted(weighted, k, seed, opts);
}

Palette palette_from_pixels(const PixelMultiset& pixels, std::uint64_t seed,
                            const PaletteOptions& opts) {
  Palette palette;
  if (pixels.counts.empty()) return palette;
  std::vector<WeightedLab> points;
  const std::size_t distinct = pixels.counts.size();
  const std::size_t stride =
      distinct > opts.max_points ? (distinct + opts.max_points - 1) / opts.max_points : 1;
  std::size_t i = 0;
  for (const auto& [rgb, count] : pixels.counts) {
    if (i++ % stride == 0) points.push_back({srgb_to_lab(rgb), static_cast<double>(count)});
  }
  const std::size_t k = std::min(opts.max_colors, points.size());
  KMeansResult km = kmeans_weighted(points, k, seed, opts.kmeans);
  palette.colors = std::move(km.centroids);
  palette.weights = std::move(km.weights);
  return palette;
}

MultiPalette extract_multi_palette(const GraphicDocument& doc, std::uint64_t seed,
                                   const PaletteOptions& opts) {
  const ElementGroups groups = group_elements(doc);
  MultiPalette mp;
  for (Group g : {Group::image, Group::svg}) {
    mp[g] = palette_from_pixels(composite_elements(doc, groups[g]),
                                seed + static_cast<std::uint64_t>(g), opts);
  }
  PixelMultiset text_colors;
  for (std::size_t idx : groups[Group::text]) {
    const Element& e = doc.elements[idx];
    if (e.opacity < kMinVisibleOpacity) continue;
    for (const auto& c : e.colors) text_colors.add(c);
  }
  mp[Group::text] = palette_from_pixels(text_colors, seed + 2, opts);
  return mp;
}

}  // namespace colorrec
