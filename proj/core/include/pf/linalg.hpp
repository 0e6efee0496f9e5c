// Small fixed-size linear algebra used throughout: 2-vectors, symmetric-ish
// 2x2 matrices and 2x2x2 tensors with the Frobenius norm.
#pragma once
#include <cmath>

namespace pf {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    Vec2 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Mat2 {
    // row-major: a(0,0)=xx a(0,1)=xy a(1,0)=yx a(1,1)=yy
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;
    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 outer(const Vec2& a, const Vec2& b) {
        return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y};
    }
    double operator()(int i, int j) const {
        return i == 0 ? (j == 0 ? xx : xy) : (j == 0 ? yx : yy);
    }
    double& at(int i, int j) {
        return i == 0 ? (j == 0 ? xx : xy) : (j == 0 ? yx : yy);
    }
    Mat2 operator+(const Mat2& o) const { return {xx + o.xx, xy + o.xy, yx + o.yx, yy + o.yy}; }
    Mat2 operator-(const Mat2& o) const { return {xx - o.xx, xy - o.xy, yx - o.yx, yy - o.yy}; }
    Mat2 operator*(double s) const { return {xx * s, xy * s, yx * s, yy * s}; }
    Mat2 mul(const Mat2& o) const {
        return {xx * o.xx + xy * o.yx, xx * o.xy + xy * o.yy,
                yx * o.xx + yy * o.yx, yx * o.xy + yy * o.yy};
    }
    Vec2 mul(const Vec2& v) const { return {xx * v.x + xy * v.y, yx * v.x + yy * v.y}; }
    Mat2 transposed() const { return {xx, yx, xy, yy}; }
    double trace() const { return xx + yy; }
    double frob2() const { return xx * xx + xy * xy + yx * yx + yy * yy; }
    double frob() const { return std::sqrt(frob2()); }
};

// t(i,j,k), i,j,k in {0,1}
struct Tens3 {
    double t[2][2][2] = {};
    double operator()(int i, int j, int k) const { return t[i][j][k]; }
    double& at(int i, int j, int k) { return t[i][j][k]; }
    static Tens3 outer(const Mat2& m, const Vec2& v) {
        Tens3 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                r.t[i][j][0] = m(i, j) * v.x;
                r.t[i][j][1] = m(i, j) * v.y;
            }
        return r;
    }
    double frob2() const {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) s += t[i][j][k] * t[i][j][k];
        return s;
    }
    double frob() const { return std::sqrt(frob2()); }
};

} // namespace pf
