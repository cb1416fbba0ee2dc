#include "bllab/grid.hpp"

#include <cmath>

namespace bllab {

RectGrid::RectGrid(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx) {
  if (nx < 3 || ny < 3) throw ArgumentError("grid needs at least 3 nodes per side");
  if (!(lx > 0)) throw ArgumentError("side length must be positive");
  h_ = lx / (nx - 1);
  ly_ = ly > 0 ? ly : h_ * (ny - 1);
  if (std::abs(ly_ / (ny - 1) - h_) > 1e-14 * std::max(1.0, h_))
    throw ArgumentError("grid cells must be square (Ly/(ny-1) != Lx/(nx-1))");

  edge_begin_[0] = 0;
  for (int j = 1; j < ny_ - 1; ++j) slots_.push_back({Edge::Left, 0, j, 1, 0, -1, 0, j - 1});
  edge_begin_[1] = static_cast<int>(slots_.size());
  for (int j = 1; j < ny_ - 1; ++j)
    slots_.push_back({Edge::Right, nx_ - 1, j, -1, 0, 1, 0, j - 1});
  edge_begin_[2] = static_cast<int>(slots_.size());
  for (int i = 1; i < nx_ - 1; ++i) slots_.push_back({Edge::Bottom, i, 0, 0, 1, 0, -1, i - 1});
  edge_begin_[3] = static_cast<int>(slots_.size());
  for (int i = 1; i < nx_ - 1; ++i)
    slots_.push_back({Edge::Top, i, ny_ - 1, 0, -1, 0, 1, i - 1});
}

int RectGrid::edge_length(Edge e) const {
  return (e == Edge::Left || e == Edge::Right) ? ny_ - 2 : nx_ - 2;
}

int RectGrid::slot_index(int i, int j) const {
  if (is_corner(i, j)) return -1;
  if (i == 0) return edge_begin_[0] + j - 1;
  if (i == nx_ - 1) return edge_begin_[1] + j - 1;
  if (j == 0) return edge_begin_[2] + i - 1;
  if (j == ny_ - 1) return edge_begin_[3] + i - 1;
  return -1;
}

std::array<std::pair<int, int>, 4> RectGrid::corners() const {
  return {{{0, 0}, {nx_ - 1, 0}, {0, ny_ - 1}, {nx_ - 1, ny_ - 1}}};
}

bool RectGrid::same_as(const RectGrid& o) const {
  return nx_ == o.nx_ && ny_ == o.ny_ && std::abs(lx_ - o.lx_) < 1e-14 &&
         std::abs(ly_ - o.ly_) < 1e-14;
}

BoundaryData BoundaryData::zeros(int m, const RectGrid& g) {
  BoundaryData f;
  f.m = m;
  f.comp.assign(m, CVec::Zero(g.boundary_count()));
  return f;
}

void BoundaryData::check(const RectGrid& g) const {
  if (static_cast<int>(comp.size()) != m)
    throw ArgumentError("boundary data must have m components");
  for (const auto& c : comp) {
    if (c.size() != g.boundary_count())
      throw ArgumentError("boundary data component has wrong length");
    if (!c.allFinite()) throw ArgumentError("boundary data is not finite");
  }
}

CVec BoundaryData::stacked() const {
  const Eigen::Index b = comp.empty() ? 0 : comp[0].size();
  CVec out(b * m + 4);
  out.head(b) = comp[0];
  for (int c = 0; c < 4; ++c) out(b + c) = corner[c];
  for (int r = 1; r < m; ++r) out.segment(b + 4 + (r - 1) * b, b) = comp[r];
  return out;
}

TraceSet TraceSet::zeros(int m, const RectGrid& g) {
  TraceSet t;
  t.m = m;
  t.comp.assign(m, CVec::Zero(g.boundary_count()));
  return t;
}

CVec TraceSet::stacked() const {
  const Eigen::Index b = comp.empty() ? 0 : comp[0].size();
  CVec out(b * m);
  for (int r = 0; r < m; ++r) out.segment(r * b, b) = comp[r];
  return out;
}

TraceSet TraceSet::operator-(const TraceSet& o) const {
  TraceSet t = *this;
  for (int r = 0; r < m; ++r) t.comp[r] -= o.comp[r];
  return t;
}

TraceSet& TraceSet::operator+=(const TraceSet& o) {
  for (int r = 0; r < m; ++r) comp[r] += o.comp[r];
  return *this;
}

double boundary_norm(const RectGrid& g, const CVec& v) {
  return std::sqrt(g.h()) * v.norm();
}

}  // namespace bllab
