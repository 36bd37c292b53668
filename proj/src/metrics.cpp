#include "laq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "laq/distance.hpp"

namespace laq {

namespace {

void require_same(const GridInfo& a, const GridInfo& b, const char* who) {
  if (!a.same_geometry(b)) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

void require_same_surface(const SurfaceLabeling& a, const SurfaceLabeling& b, const char* who) {
  if (!a.grid.same_geometry(b.grid) || a.surface != b.surface)
    throw std::invalid_argument(std::string(who) + ": surface voxel sets differ");
}

// Directed sum and max of nearest distances from the boundary of `from` into
// the distance field of the boundary of `to`.
struct Directed {
  double sum = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

Directed directed_boundary_distances(const LabelMask& from_boundary, const DistanceField& to_field) {
  Directed d;
  for (std::size_t i = 0; i < from_boundary.size(); ++i) {
    if (!from_boundary[i]) continue;
    const double v = to_field[i];
    d.sum += v;
    d.max = std::max(d.max, v);
    ++d.count;
  }
  return d;
}

std::string format_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

void accumulate(MetricSummary::Stat& s, const std::optional<double>& v, std::vector<double>& scratch) {
  if (!v) return;
  scratch.push_back(*v);
  ++s.n;
}

MetricSummary::Stat finish(const std::vector<double>& vals) {
  MetricSummary::Stat s;
  s.n = static_cast<int>(vals.size());
  if (s.n == 0) return s;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= vals.size();
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= vals.size();
  s.mean = mean;
  s.stddev = std::sqrt(var);
  return s;
}

}  // namespace

double dice(const LabelMask& a, const LabelMask& b) {
  require_same(a.grid(), b.grid(), "dice");

  std::size_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
    inter += a[i] & b[i];
  }
  if (na + nb == 0) throw std::invalid_argument("dice: both masks empty");
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double asd(const LabelMask& a, const LabelMask& b) {
  require_same(a.grid(), b.grid(), "asd");

  const LabelMask ba = extract_boundary(a);
  const LabelMask bb = extract_boundary(b);
  const DistanceField da = edt(ba);
  const DistanceField db = edt(bb);

  const Directed ab = directed_boundary_distances(ba, db);
  const Directed ba_dir = directed_boundary_distances(bb, da);
  return (ab.sum + ba_dir.sum) / static_cast<double>(ab.count + ba_dir.count);
}

double hausdorff(const LabelMask& a, const LabelMask& b) {
  require_same(a.grid(), b.grid(), "hausdorff");

  const LabelMask ba = extract_boundary(a);
  const LabelMask bb = extract_boundary(b);
  const DistanceField da = edt(ba);
  const DistanceField db = edt(bb);

  const Directed ab = directed_boundary_distances(ba, db);
  const Directed ba_dir = directed_boundary_distances(bb, da);
  return std::max(ab.max, ba_dir.max);
}

double surface_accuracy(const SurfaceLabeling& pred, const SurfaceLabeling& gold) {
  require_same_surface(pred, gold, "surface_accuracy");
  if (pred.surface.empty()) throw std::invalid_argument("surface_accuracy: empty surface");

  std::size_t agree = 0;
  for (std::size_t k = 0; k < pred.label.size(); ++k) agree += pred.label[k] == gold.label[k];
  return static_cast<double>(agree) / static_cast<double>(pred.label.size());
}

double dice_scar(const SurfaceLabeling& pred, const SurfaceLabeling& gold) {
  require_same_surface(pred, gold, "dice_scar");

  std::size_t np = 0, ng = 0, inter = 0;
  for (std::size_t k = 0; k < pred.label.size(); ++k) {
    const bool p = pred.label[k] == SurfaceClass::scar;
    const bool g = gold.label[k] == SurfaceClass::scar;
    np += p;
    ng += g;
    inter += p && g;
  }
  if (np + ng == 0) throw std::invalid_argument("dice_scar: both scar sets empty");
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

double generalized_dice(const SurfaceLabeling& pred, const SurfaceLabeling& gold) {
  require_same_surface(pred, gold, "generalized_dice");
  if (pred.surface.empty()) throw std::invalid_argument("generalized_dice: empty surface");

  std::size_t inter = 0;
  for (std::size_t k = 0; k < pred.label.size(); ++k) inter += pred.label[k] == gold.label[k];
  // Per-class intersections sum to the agreement count; per-class sizes sum
  // to 2n for each labeling.
  return 2.0 * static_cast<double>(inter) / static_cast<double>(2 * pred.label.size());
}

std::string metric_csv_header() { return "case,dice,asd_mm,hd_mm,accuracy,dice_scar,gdice\n"; }

std::string metric_csv_row(const std::string& case_id, const MetricReport& r) {
  return case_id + "," + format_cell(r.dice) + "," + format_cell(r.asd_mm) + "," +
         format_cell(r.hd_mm) + "," + format_cell(r.accuracy) + "," + format_cell(r.dice_scar) +
         "," + format_cell(r.gdice) + "\n";
}

MetricSummary summarize(const std::vector<MetricReport>& reports) {
  std::vector<double> vd, va, vh, vacc, vds, vg;
  MetricSummary s;
  for (const auto& r : reports) {
    accumulate(s.dice, r.dice, vd);
    accumulate(s.asd_mm, r.asd_mm, va);
    accumulate(s.hd_mm, r.hd_mm, vh);
    accumulate(s.accuracy, r.accuracy, vacc);
    accumulate(s.dice_scar, r.dice_scar, vds);
    accumulate(s.gdice, r.gdice, vg);
  }
  s.dice = finish(vd);
  s.asd_mm = finish(va);
  s.hd_mm = finish(vh);
  s.accuracy = finish(vacc);
  s.dice_scar = finish(vds);
  s.gdice = finish(vg);
  return s;
}

std::string summary_csv(const MetricSummary& s) {
  auto row = [](const char* name, const MetricSummary::Stat& st) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g\n", name, st.n, st.mean, st.stddev);
    return std::string(buf);
  };
  std::string out = "metric,n,mean,stddev\n";
  out += row("dice", s.dice);
  out += row("asd_mm", s.asd_mm);
  out += row("hd_mm", s.hd_mm);
  out += row("accuracy", s.accuracy);
  out += row("dice_scar", s.dice_scar);
  out += row("gdice", s.gdice);
  return out;
}

}  // namespace laq
