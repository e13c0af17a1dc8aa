#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tenspec/errors.hpp"

namespace tenspec {

/// Zero-based coordinates, one per mode.
using MultiIndex = std::vector<std::size_t>;

/// Extents (I_1, ..., I_d) of a dense tensor. Every extent is at least one
/// and the element count must be addressable.
class Shape {
public:
    Shape() : dims_{1} {}

    Shape(std::initializer_list<std::size_t> dims) : Shape(std::vector<std::size_t>(dims)) {}

    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw InvalidShape("shape must have at least one mode");
        constexpr std::size_t limit = std::numeric_limits<std::ptrdiff_t>::max() / sizeof(double);
        std::size_t count = 1;
        for (auto extent : dims_) {
            if (extent == 0) throw InvalidShape("shape extents must be >= 1, got " + to_string());
            if (count > limit / extent)
                throw OverflowError("element count of shape " + to_string() + " overflows");
            count *= extent;
        }
        count_ = count;
    }

    [[nodiscard]] std::size_t order() const noexcept { return dims_.size(); }
    [[nodiscard]] std::size_t element_count() const noexcept { return count_; }
    [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t operator[](std::size_t mode) const { return dims_.at(mode); }

    /// Row-major strides: the last mode has stride one.
    [[nodiscard]] std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(dims_.size());
        std::size_t acc = 1;
        for (std::size_t k = dims_.size(); k-- > 0;) {
            s[k] = acc;
            acc *= dims_[k];
        }
        return s;
    }

    /// Sub-shape made of modes [first, first + count).
    [[nodiscard]] Shape slice(std::size_t first, std::size_t count) const {
        if (count == 0 || first + count > dims_.size())
            throw InvalidAxis("cannot slice " + std::to_string(count) + " modes at " +
                              std::to_string(first) + " from " + to_string());
        return Shape(std::vector<std::size_t>(dims_.begin() + static_cast<std::ptrdiff_t>(first),
                                              dims_.begin() + static_cast<std::ptrdiff_t>(first + count)));
    }

    [[nodiscard]] std::string to_string() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t k = 0; k < dims_.size(); ++k) os << (k ? "," : "") << dims_[k];
        os << ')';
        return os.str();
    }

    friend bool operator==(const Shape& a, const Shape& b) { return a.dims_ == b.dims_; }

private:
    std::vector<std::size_t> dims_;
    std::size_t count_ = 1;
};

/// Concatenation of mode lists, I ++ J.
inline Shape concat(const Shape& a, const Shape& b) {
    std::vector<std::size_t> dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    return Shape(std::move(dims));
}

inline std::size_t linearize(const Shape& shape, std::span<const std::size_t> index) {
    if (index.size() != shape.order())
        throw InvalidAxis("multi-index length " + std::to_string(index.size()) +
                          " does not match order of " + shape.to_string());
    std::size_t m = 0;
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= shape[k])
            throw InvalidAxis("coordinate " + std::to_string(index[k]) + " out of range in mode " +
                              std::to_string(k) + " of " + shape.to_string());
        m = m * shape[k] + index[k];
    }
    return m;
}

inline MultiIndex delinearize(const Shape& shape, std::size_t m) {
    if (m >= shape.element_count())
        throw InvalidAxis("linear index " + std::to_string(m) + " out of range for " + shape.to_string());
    MultiIndex index(shape.order());
    for (std::size_t k = shape.order(); k-- > 0;) {
        index[k] = m % shape[k];
        m /= shape[k];
    }
    return index;
}

/// Advances a row-major odometer; returns false after the last index.
inline bool next_index(MultiIndex& index, std::span<const std::size_t> extents) {
    for (std::size_t k = extents.size(); k-- > 0;) {
        if (++index[k] < extents[k]) return true;
        index[k] = 0;
    }
    return false;
}

/// Explicit table of the bijection between linear indices and multi-indices
/// of one mode group. rows[m] is the multi-index carried by linear index m.
struct IndexMap {
    Shape shape;
    std::vector<MultiIndex> rows;

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
    [[nodiscard]] std::size_t linear(std::span<const std::size_t> index) const {
        return linearize(shape, index);
    }
};

inline IndexMap build_index_map(const Shape& shape) {
    IndexMap map{shape, {}};
    map.rows.reserve(shape.element_count());
    MultiIndex index(shape.order(), 0);
    do {
        map.rows.push_back(index);
    } while (next_index(index, shape.dims()));
    return map;
}

/// Dense real tensor in row-major storage.
class DenseTensor {
public:
    DenseTensor() : values_(1, 0.0) {}

    /// Zero tensor.
    explicit DenseTensor(Shape shape) : shape_(std::move(shape)), values_(shape_.element_count(), 0.0) {}

    /// Takes ownership of externally supplied values; rejects wrong length
    /// and non-finite entries.
    DenseTensor(Shape shape, std::vector<double> values)
        : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != shape_.element_count())
            throw ShapeMismatch("got " + std::to_string(values_.size()) + " values for shape " +
                                shape_.to_string());
        for (std::size_t n = 0; n < values_.size(); ++n)
            if (!std::isfinite(values_[n]))
                throw NonFiniteValue("non-finite value at linear index " + std::to_string(n));
    }

    static DenseTensor filled(Shape shape, double value) {
        DenseTensor t(std::move(shape));
        std::fill(t.values_.begin(), t.values_.end(), value);
        return t;
    }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.order(); }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] const double* data() const noexcept { return values_.data(); }
    [[nodiscard]] double* data() noexcept { return values_.data(); }

    double& operator[](std::size_t m) { return values_[m]; }
    double operator[](std::size_t m) const { return values_[m]; }

    double& at(std::span<const std::size_t> index) { return values_[linearize(shape_, index)]; }
    [[nodiscard]] double at(std::span<const std::size_t> index) const {
        return values_[linearize(shape_, index)];
    }
    double& at(std::initializer_list<std::size_t> index) {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Same values under a different shape with equal element count.
    [[nodiscard]] DenseTensor reshaped(Shape shape) const& {
        DenseTensor t = *this;
        return std::move(t).reshaped(std::move(shape));
    }
    [[nodiscard]] DenseTensor reshaped(Shape shape) && {
        if (shape.element_count() != shape_.element_count())
            throw ShapeMismatch("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
        shape_ = std::move(shape);
        return std::move(*this);
    }

    DenseTensor& operator+=(const DenseTensor& other) {
        require_same_shape(other);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& other) {
        require_same_shape(other);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
        return *this;
    }
    DenseTensor& operator*=(double c) {
        for (auto& v : values_) v *= c;
        return *this;
    }

    /// this += c * other
    void axpy(double c, const DenseTensor& other) {
        require_same_shape(other);
        for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += c * other.values_[n];
    }

    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(double c, DenseTensor a) { return a *= c; }

    friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    void require_same_shape(const DenseTensor& other) const {
        if (!(other.shape_ == shape_))
            throw ShapeMismatch("shape " + shape_.to_string() + " vs " + other.shape_.to_string());
    }

    Shape shape_;
    std::vector<double> values_;
};

inline double inner(const DenseTensor& x, const DenseTensor& y) {
    if (!(x.shape() == y.shape()))
        throw ShapeMismatch("inner: shape " + x.shape().to_string() + " vs " + y.shape().to_string());
    double sum = 0.0;
    const double* a = x.data();
    const double* b = y.data();
    for (std::size_t n = 0; n < x.size(); ++n) sum += a[n] * b[n];
    return sum;
}

inline double norm(const DenseTensor& x) { return std::sqrt(inner(x, x)); }

/// norm(reference - approx) / norm(reference), with 0/0 taken as 0.
inline double relative_error(const DenseTensor& reference, const DenseTensor& approx) {
    const double ref = norm(reference);
    const double diff = norm(reference - approx);
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / ref;
}

inline DenseTensor outer(const DenseTensor& x, const DenseTensor& y) {
    DenseTensor out(concat(x.shape(), y.shape()));
    const std::size_t ny = y.size();
    double* dst = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < ny; ++j) dst[i * ny + j] = xi * y[j];
    }
    return out;
}

inline DenseTensor outer(const DenseTensor& x, const DenseTensor& y, const DenseTensor& z) {
    return outer(outer(x, y), z);
}

namespace detail {

inline void check_axes(const DenseTensor& t, std::span<const std::size_t> axes, const char* which) {
    std::vector<bool> seen(t.order(), false);
    for (auto a : axes) {
        if (a >= t.order())
            throw InvalidAxis(std::string("contract: axis ") + std::to_string(a) + " out of range for " +
                              which + " of order " + std::to_string(t.order()));
        if (seen[a]) throw InvalidAxis(std::string("contract: repeated axis ") + std::to_string(a) + " in " + which);
        seen[a] = true;
    }
}

inline std::vector<std::size_t> free_modes(std::size_t order, std::span<const std::size_t> axes) {
    std::vector<std::size_t> modes;
    for (std::size_t k = 0; k < order; ++k)
        if (std::find(axes.begin(), axes.end(), k) == axes.end()) modes.push_back(k);
    return modes;
}

/// Storage offsets of every point of the row-major box spanned by `modes`.
inline std::vector<std::size_t> box_offsets(const Shape& shape, std::span<const std::size_t> modes) {
    const auto strides = shape.strides();
    std::vector<std::size_t> extents;
    std::size_t count = 1;
    for (auto m : modes) {
        extents.push_back(shape[m]);
        count *= shape[m];
    }
    std::vector<std::size_t> offsets;
    offsets.reserve(count);
    MultiIndex index(modes.size(), 0);
    do {
        std::size_t off = 0;
        for (std::size_t k = 0; k < modes.size(); ++k) off += index[k] * strides[modes[k]];
        offsets.push_back(off);
    } while (!modes.empty() && next_index(index, extents));
    return offsets;
}

}  // namespace detail

/// Sums X and Y over the paired modes axes_x[k] <-> axes_y[k]. The result
/// carries the remaining modes of X followed by those of Y, in their original
/// order; a full contraction yields a shape-(1) tensor.
inline DenseTensor contract(const DenseTensor& x, const DenseTensor& y,
                            std::span<const std::size_t> axes_x, std::span<const std::size_t> axes_y) {
    if (axes_x.size() != axes_y.size())
        throw InvalidAxis("contract: axis lists differ in length");
    detail::check_axes(x, axes_x, "X");
    detail::check_axes(y, axes_y, "Y");
    for (std::size_t k = 0; k < axes_x.size(); ++k)
        if (x.shape()[axes_x[k]] != y.shape()[axes_y[k]])
            throw ShapeMismatch("contract: extent " + std::to_string(x.shape()[axes_x[k]]) + " of X mode " +
                                std::to_string(axes_x[k]) + " vs " + std::to_string(y.shape()[axes_y[k]]) +
                                " of Y mode " + std::to_string(axes_y[k]));

    const auto free_x = detail::free_modes(x.order(), axes_x);
    const auto free_y = detail::free_modes(y.order(), axes_y);
    std::vector<std::size_t> dims;
    for (auto m : free_x) dims.push_back(x.shape()[m]);
    for (auto m : free_y) dims.push_back(y.shape()[m]);
    if (dims.empty()) dims.push_back(1);
    DenseTensor out{Shape(std::move(dims))};

    const auto off_x = detail::box_offsets(x.shape(), free_x);
    const auto off_y = detail::box_offsets(y.shape(), free_y);
    const auto sum_x = detail::box_offsets(x.shape(), axes_x);
    const auto sum_y = detail::box_offsets(y.shape(), axes_y);

    const std::size_t ny = off_y.size();
    bool y_contiguous = true;
    for (std::size_t b = 0; b < ny; ++b) y_contiguous = y_contiguous && off_y[b] == b;

    const double* xd = x.data();
    const double* yd = y.data();
    double* od = out.data();
    // Loop order (a, k, b) keeps the sum over k in ascending order for every
    // output element.
    for (std::size_t a = 0; a < off_x.size(); ++a) {
        double* row = od + a * ny;
        for (std::size_t k = 0; k < sum_x.size(); ++k) {
            const double xv = xd[off_x[a] + sum_x[k]];
            const double* ybase = yd + sum_y[k];
            if (y_contiguous) {
                for (std::size_t b = 0; b < ny; ++b) row[b] += xv * ybase[b];
            } else {
                for (std::size_t b = 0; b < ny; ++b) row[b] += xv * ybase[off_y[b]];
            }
        }
    }
    return out;
}

inline DenseTensor contract(const DenseTensor& x, const DenseTensor& y,
                            std::initializer_list<std::size_t> axes_x,
                            std::initializer_list<std::size_t> axes_y) {
    return contract(x, y, std::span<const std::size_t>(axes_x.begin(), axes_x.size()),
                    std::span<const std::size_t>(axes_y.begin(), axes_y.size()));
}

/// Matricization: the first `split` modes become the row index, the rest the
/// column index. Row-major storage makes this a pure reshape.
inline DenseTensor unfold(const DenseTensor& x, std::size_t split) {
    if (split < 1 || split >= x.order())
        throw InvalidSplit("unfold: split " + std::to_string(split) + " invalid for order " +
                           std::to_string(x.order()));
    const std::size_t rows = x.shape().slice(0, split).element_count();
    return x.reshaped(Shape{rows, x.size() / rows});
}

/// Inverse of unfold.
inline DenseTensor fold(const DenseTensor& matrix, const Shape& shape, std::size_t split) {
    if (split < 1 || split >= shape.order())
        throw InvalidSplit("fold: split " + std::to_string(split) + " invalid for order " +
                           std::to_string(shape.order()));
    const std::size_t rows = shape.slice(0, split).element_count();
    if (matrix.order() != 2 || matrix.shape()[0] != rows || matrix.shape()[1] != shape.element_count() / rows)
        throw ShapeMismatch("fold: matrix " + matrix.shape().to_string() + " does not match " +
                            shape.to_string() + " split at " + std::to_string(split));
    return matrix.reshaped(shape);
}

/// Entries i.i.d. uniform on [-1, 1). Generator: std::mt19937_64 seeded with
/// `seed`; each entry consumes one 64-bit draw, whose top 53 bits give
/// u in [0, 1) and the entry is 2u - 1. Both steps are exact, so the stream
/// is identical on every conforming platform.
inline DenseTensor random_tensor(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    DenseTensor t(shape);
    for (auto& v : t.values()) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        v = 2.0 * u - 1.0;
    }
    return t;
}

}  // namespace tenspec
