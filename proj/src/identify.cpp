#include "rainstorm/identify.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rainstorm/parallel.hpp"

namespace rainstorm {

namespace {

struct BBox {
    int xmin, xmax, ymin, ymax;
};

BBox bbox_of(const Region& r) {
    BBox b{std::numeric_limits<int>::max(), std::numeric_limits<int>::min(),
           std::numeric_limits<int>::max(), std::numeric_limits<int>::min()};
    for (const Cell& c : r.cells) {
        b.xmin = std::min(b.xmin, c.x);
        b.xmax = std::max(b.xmax, c.x);
        b.ymin = std::min(b.ymin, c.y);
        b.ymax = std::max(b.ymax, c.y);
    }
    return b;
}

// Lower bound on the edge-to-edge gap from bounding boxes alone.
double bbox_gap_km(const BBox& a, const BBox& b, const GridGeometry& geom) {
    const int sx = std::max({0, a.xmin - b.xmax - 1, b.xmin - a.xmax - 1});
    const int sy = std::max({0, a.ymin - b.ymax - 1, b.ymin - a.ymax - 1});
    return std::hypot(sx * geom.dx_km, sy * geom.dy_km);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int i) {
        while (parent[static_cast<size_t>(i)] != i) {
            parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
            i = parent[static_cast<size_t>(i)];
        }
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }
};

// gap <= limit with early exit; avoids exhausting large cell-pair scans
bool regions_within_gap(const Region& a, const Region& b, const GridGeometry& geom,
                        double limit) {
    for (const Cell& ca : a.cells)
        for (const Cell& cb : b.cells)
            if (cell_gap_km(ca, cb, geom) <= limit) return true;
    return false;
}

// Connected groups of region indices under gap <= max_gap_km.
std::vector<std::vector<int>> cluster_regions(const std::vector<Region>& regions,
                                              double max_gap_km, const GridGeometry& geom) {
    const int n = static_cast<int>(regions.size());
    std::vector<BBox> boxes;
    boxes.reserve(static_cast<size_t>(n));
    for (const Region& r : regions) boxes.push_back(bbox_of(r));

    UnionFind uf(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (uf.find(i) == uf.find(j)) continue;
            if (bbox_gap_km(boxes[static_cast<size_t>(i)], boxes[static_cast<size_t>(j)], geom) >
                max_gap_km)
                continue;
            if (regions_within_gap(regions[static_cast<size_t>(i)],
                                   regions[static_cast<size_t>(j)], geom, max_gap_km))
                uf.unite(i, j);
        }
    }
    std::vector<std::vector<int>> groups;
    std::vector<int> root_to_group(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        const int r = uf.find(i);
        if (root_to_group[static_cast<size_t>(r)] < 0) {
            root_to_group[static_cast<size_t>(r)] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<size_t>(root_to_group[static_cast<size_t>(r)])].push_back(i);
    }
    return groups;
}

// Segments ordered by their first row-major cell, ids reassigned to match.
void finalize_segments(std::vector<Segment>& segments) {
    for (Segment& s : segments) {
        std::sort(s.regions.begin(), s.regions.end(),
                  [](const Region& a, const Region& b) { return a.cells.front() < b.cells.front(); });
    }
    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        return a.regions.front().cells.front() < b.regions.front().cells.front();
    });
    for (size_t i = 0; i < segments.size(); ++i) segments[i].id = static_cast<int>(i);
}

Segment make_segment(const std::vector<Region>& regions, const std::vector<int>& members, int t) {
    Segment s;
    s.t = t;
    for (int idx : members) s.regions.push_back(regions[static_cast<size_t>(idx)]);
    return s;
}

}  // namespace

double Region::total_mm() const {
    double total = 0.0;
    for (float v : values) total += v;
    return total;
}

int Segment::cell_count() const {
    int n = 0;
    for (const Region& r : regions) n += r.cell_count();
    return n;
}

double Segment::total_mm() const {
    double total = 0.0;
    for (const Region& r : regions) total += r.total_mm();
    return total;
}

std::pair<double, double> Segment::centroid_xy() const {
    double wx = 0.0, wy = 0.0, w = 0.0;
    for (const Region& r : regions) {
        for (size_t i = 0; i < r.cells.size(); ++i) {
            wx += r.values[i] * r.cells[i].x;
            wy += r.values[i] * r.cells[i].y;
            w += r.values[i];
        }
    }
    return {wx / w, wy / w};
}

int IdentParams::resolved_large_min_cells(const GridGeometry& geom) const {
    if (large_region_min_cells > 0) return large_region_min_cells;
    return static_cast<int>(std::ceil(large_region_min_km2 / geom.cell_area_km2()));
}

void IdentParams::validate() const {
    if (!(wet_threshold_mm_per_step > 0))
        throw std::invalid_argument("ident: wet threshold must be > 0");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("ident: connectivity must be 4 or 8");
    if (dilation_radius_km < 0 || small_attach_max_km < 0)
        throw std::invalid_argument("ident: radii must be >= 0");
    if (large_region_min_cells < 0 || !(large_region_min_km2 > 0))
        throw std::invalid_argument("ident: large-region threshold must be positive");
}

double region_gap_km(const Region& a, const Region& b, const GridGeometry& geom) {
    double best = std::numeric_limits<double>::infinity();
    for (const Cell& ca : a.cells) {
        for (const Cell& cb : b.cells) {
            best = std::min(best, cell_gap_km(ca, cb, geom));
            if (best == 0.0) return 0.0;
        }
    }
    return best;
}

std::vector<Region> connected_regions(const Eigen::ArrayXXf& slice, const MaskArray& mask,
                                      const IdentParams& params) {
    params.validate();
    const int ny = static_cast<int>(slice.rows()), nx = static_cast<int>(slice.cols());
    if (mask.rows() != ny || mask.cols() != nx)
        throw std::invalid_argument("connected_regions: slice/mask shape mismatch");

    const float thr = static_cast<float>(params.wet_threshold_mm_per_step);
    auto wet = [&](int x, int y) { return mask(y, x) && slice(y, x) > thr; };

    std::vector<int> label(static_cast<size_t>(nx) * ny, -1);
    auto lab = [&](int x, int y) -> int& { return label[static_cast<size_t>(y) * nx + x]; };

    static constexpr int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dx4[] = {0, -1, 1, 0};
    static constexpr int dy4[] = {-1, 0, 0, 1};
    const int* ddx = params.connectivity == 8 ? dx8 : dx4;
    const int* ddy = params.connectivity == 8 ? dy8 : dy4;
    const int nd = params.connectivity;

    std::vector<Region> regions;
    std::vector<Cell> stack;
    for (int y = 0; y < ny; ++y) {
        for (int x = 0; x < nx; ++x) {
            if (!wet(x, y) || lab(x, y) >= 0) continue;
            const int id = static_cast<int>(regions.size());
            Region reg;
            stack.assign(1, {x, y});
            lab(x, y) = id;
            while (!stack.empty()) {
                const Cell c = stack.back();
                stack.pop_back();
                reg.cells.push_back(c);
                for (int k = 0; k < nd; ++k) {
                    const int px = c.x + ddx[k], py = c.y + ddy[k];
                    if (px < 0 || px >= nx || py < 0 || py >= ny) continue;
                    if (!wet(px, py) || lab(px, py) >= 0) continue;
                    lab(px, py) = id;
                    stack.push_back({px, py});
                }
            }
            std::sort(reg.cells.begin(), reg.cells.end());
            reg.values.reserve(reg.cells.size());
            for (const Cell& c : reg.cells) reg.values.push_back(slice(c.y, c.x));
            regions.push_back(std::move(reg));
        }
    }
    return regions;
}

std::vector<Segment> almost_connected_label(const std::vector<Region>& regions, double radius_km,
                                            const GridGeometry& geom, int t) {
    if (radius_km < 0) throw std::invalid_argument("almost_connected_label: radius must be >= 0");
    std::vector<Segment> segments;
    for (const auto& group : cluster_regions(regions, 2.0 * radius_km, geom))
        segments.push_back(make_segment(regions, group, t));
    finalize_segments(segments);
    return segments;
}

std::vector<Segment> identify_segments(const Eigen::ArrayXXf& slice, const MaskArray& mask,
                                       const IdentParams& params, const GridGeometry& geom,
                                       int t) {
    const std::vector<Region> regions = connected_regions(slice, mask, params);
    const int large_min = params.resolved_large_min_cells(geom);

    std::vector<int> large_idx, small_idx;
    for (int i = 0; i < static_cast<int>(regions.size()); ++i) {
        (regions[static_cast<size_t>(i)].cell_count() >= large_min ? large_idx : small_idx)
            .push_back(i);
    }

    // Stage 2: almost-connected labeling over the large regions only.
    std::vector<Region> large_regions;
    large_regions.reserve(large_idx.size());
    for (int i : large_idx) large_regions.push_back(regions[static_cast<size_t>(i)]);
    std::vector<std::vector<int>> groups =
        cluster_regions(large_regions, 2.0 * params.dilation_radius_km, geom);

    std::vector<Segment> segments;
    segments.reserve(groups.size());
    std::vector<double> seg_total;  // stage-2 totals, used for tie-breaks
    for (const auto& g : groups) {
        Segment s = make_segment(large_regions, g, t);
        seg_total.push_back(s.total_mm());
        segments.push_back(std::move(s));
    }

    // Stage 3: attach each small region to the closest stage-2 segment if
    // within reach. Distances and tie-break totals refer to the stage-2
    // composition only, so the outcome is independent of attachment order.
    std::vector<size_t> stage2_count;
    for (const Segment& s : segments) stage2_count.push_back(s.regions.size());

    std::vector<int> leftover;
    for (int si : small_idx) {
        const Region& small = regions[static_cast<size_t>(si)];
        int best = -1;
        double best_gap = std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(segments.size()); ++k) {
            double gap = std::numeric_limits<double>::infinity();
            for (size_t m = 0; m < stage2_count[static_cast<size_t>(k)]; ++m)
                gap = std::min(gap, region_gap_km(small, segments[static_cast<size_t>(k)].regions[m],
                                                  geom));
            if (gap < best_gap ||
                (gap == best_gap && best >= 0 &&
                 seg_total[static_cast<size_t>(k)] > seg_total[static_cast<size_t>(best)])) {
                best = k;
                best_gap = gap;
            }
        }
        if (best >= 0 && best_gap <= params.small_attach_max_km) {
            segments[static_cast<size_t>(best)].regions.push_back(small);
        } else {
            leftover.push_back(si);
        }
    }

    // Stage 4: cluster the remaining small regions among themselves.
    std::vector<Region> rest;
    rest.reserve(leftover.size());
    for (int i : leftover) rest.push_back(regions[static_cast<size_t>(i)]);
    for (const auto& g : cluster_regions(rest, 2.0 * params.dilation_radius_km, geom))
        segments.push_back(make_segment(rest, g, t));

    finalize_segments(segments);
    return segments;
}

std::vector<std::vector<Segment>> identify_all(const GridField& field, const IdentParams& params,
                                               int threads) {
    params.validate();
    std::vector<std::vector<Segment>> out(static_cast<size_t>(field.nt()));
    parallel_for(field.nt(), threads, [&](int t) {
        out[static_cast<size_t>(t)] =
            identify_segments(field.steps[static_cast<size_t>(t)], field.mask, params, field.geom, t);
    });
    return out;
}

}  // namespace rainstorm
