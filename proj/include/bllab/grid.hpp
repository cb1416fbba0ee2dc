#pragma once

#include <array>
#include <vector>

#include "bllab/common.hpp"

namespace bllab {

enum class Edge { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// Uniform node grid on [0,Lx] x [0,Ly] with square cells.
///
/// Boundary slots are the non-corner boundary nodes, ordered edge-major
/// (left, right, bottom, top) and node-minor (increasing coordinate along the
/// edge). All boundary vectors in the library use this order.
class RectGrid {
 public:
  struct Slot {
    Edge edge;
    int i, j;        // node
    int di, dj;      // unit step into the domain
    double nx, ny;   // outward normal
    int tangent;     // position along the edge
  };

  RectGrid(int nx, int ny, double lx = 1.0, double ly = -1.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }

  int node_count() const { return nx_ * ny_; }
  int node(int i, int j) const { return i + nx_ * j; }
  double x(int i) const { return i * h_; }
  double y(int j) const { return j * h_; }

  bool is_interior(int i, int j) const {
    return i > 0 && j > 0 && i < nx_ - 1 && j < ny_ - 1;
  }
  bool is_corner(int i, int j) const {
    return (i == 0 || i == nx_ - 1) && (j == 0 || j == ny_ - 1);
  }

  int interior_count() const { return (nx_ - 2) * (ny_ - 2); }
  int interior_index(int i, int j) const { return (i - 1) + (nx_ - 2) * (j - 1); }
  std::pair<int, int> interior_node(int k) const {
    return {1 + k % (nx_ - 2), 1 + k / (nx_ - 2)};
  }

  int boundary_count() const { return static_cast<int>(slots_.size()); }
  const Slot& slot(int s) const { return slots_[s]; }
  const std::vector<Slot>& slots() const { return slots_; }
  int edge_begin(Edge e) const { return edge_begin_[static_cast<int>(e)]; }
  int edge_length(Edge e) const;
  /// Slot index of the boundary node (i,j), or -1 for corners and non-boundary nodes.
  int slot_index(int i, int j) const;

  /// Corners in the order (0,0), (Lx,0), (0,Ly), (Lx,Ly).
  std::array<std::pair<int, int>, 4> corners() const;

  bool same_as(const RectGrid& other) const;

 private:
  int nx_, ny_;
  double lx_, ly_, h_;
  std::vector<Slot> slots_;
  std::array<int, 4> edge_begin_{};
};

/// Dirichlet data (f_0, ..., f_{m-1}) on the boundary slots. For m >= 2 the
/// corner values of f_0 also enter the discrete problem.
struct BoundaryData {
  int m = 1;
  std::vector<CVec> comp;
  std::array<cplx, 4> corner{};

  static BoundaryData zeros(int m, const RectGrid& g);
  void check(const RectGrid& g) const;
  /// Stacked vector [f_0 ; corners ; f_1 ; ... ].
  CVec stacked() const;
};

/// Higher normal derivatives (g_m, ..., g_{2m-1}) on the boundary slots.
struct TraceSet {
  int m = 1;
  std::vector<CVec> comp;

  static TraceSet zeros(int m, const RectGrid& g);
  CVec stacked() const;
  TraceSet operator-(const TraceSet& o) const;
  TraceSet& operator+=(const TraceSet& o);
};

/// Nodal field on the full grid, plus the ghost layer outside each boundary
/// slot (used by the clamped m=2 discretization).
struct GridField {
  CVec values;
  CVec ghost;
};

/// Boundary slot inner product weights (h each; corners carry no weight).
double boundary_norm(const RectGrid& g, const CVec& v);

}  // namespace bllab
