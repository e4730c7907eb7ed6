#include "enhance/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "enhance/color.hpp"
#include "enhance/errors.hpp"

namespace enhance {

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw ShapeError("psnr: image dimensions differ");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

const std::vector<double>& gaussian_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(kWin);
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            double d = i - (kWin - 1) / 2.0;
            v[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += v[i];
        }
        for (double& x : v) x /= sum;
        return v;
    }();
    return k;
}

// Separable Gaussian filter, valid region only.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w) {
    const auto& k = gaussian_kernel();
    int oh = h - kWin + 1;
    int ow = w - kWin + 1;
    std::vector<double> tmp(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[i] * img[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[i] * tmp[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = s;
        }
    return out;
}

double ssim_channel(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    const double c1 = (kK1 * 1.0) * (kK1 * 1.0);
    const double c2 = (kK2 * 1.0) * (kK2 * 1.0);
    size_t n = a.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    auto mu_a = filter_valid(a, h, w);
    auto mu_b = filter_valid(b, h, w);
    auto s_aa = filter_valid(aa, h, w);
    auto s_bb = filter_valid(bb, h, w);
    auto s_ab = filter_valid(ab, h, w);
    double total = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        double ma = mu_a[i], mb = mu_b[i];
        double va = s_aa[i] - ma * ma;
        double vb = s_bb[i] - mb * mb;
        double cov = s_ab[i] - ma * mb;
        double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw ShapeError("ssim: image dimensions differ");
    if (a.height < kWin || a.width < kWin)
        throw ShapeError("ssim: image smaller than the 11x11 window");
    size_t n = a.pixel_count();
    double total = 0.0;
    std::vector<double> ca(n), cb(n);
    for (int c = 0; c < 3; ++c) {
        for (size_t i = 0; i < n; ++i) {
            ca[i] = a.data[i * 3 + c];
            cb[i] = b.data[i * 3 + c];
        }
        total += ssim_channel(ca, cb, a.height, a.width);
    }
    return total / 3.0;
}

EvalReport evaluate_pairs(const std::vector<std::pair<ImageBuffer, ImageBuffer>>& pairs,
                          const std::vector<std::string>& ids) {
    if (pairs.empty()) throw ShapeError("evaluate_pairs: empty pair list");
    EvalReport rep;
    for (size_t i = 0; i < pairs.size(); ++i) {
        EvalRow row;
        row.id = i < ids.size() ? ids[i] : std::to_string(i);
        row.mean_lab_l2 = mean_lab_l2(pairs[i].first, pairs[i].second);
        row.psnr_db = psnr(pairs[i].first, pairs[i].second);
        row.ssim = ssim(pairs[i].first, pairs[i].second);
        rep.per_image_rows.push_back(row);
    }
    for (const auto& r : rep.per_image_rows) {
        rep.mean_lab_l2 += r.mean_lab_l2;
        rep.psnr_db += r.psnr_db;
        rep.ssim += r.ssim;
    }
    double n = static_cast<double>(rep.per_image_rows.size());
    rep.mean_lab_l2 /= n;
    rep.psnr_db /= n;
    rep.ssim /= n;
    return rep;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_report_csv: cannot open " + path);
    f << "id,mean_lab_l2,psnr_db,ssim\n";
    char buf[160];
    for (const auto& r : report.per_image_rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.4f,%.6f\n", r.id.c_str(), r.mean_lab_l2,
                      r.psnr_db, r.ssim);
        f << buf;
    }
    std::snprintf(buf, sizeof(buf), "MEAN,%.6f,%.4f,%.6f\n", report.mean_lab_l2, report.psnr_db,
                  report.ssim);
    f << buf;
    if (!f) throw IoError("write_report_csv: write failed for " + path);
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s %12s %10s %8s\n", "id", "mean_lab_l2", "psnr_db",
                  "ssim");
    out << buf;
    for (const auto& r : report.per_image_rows) {
        std::snprintf(buf, sizeof(buf), "%-24s %12.4f %10.3f %8.4f\n", r.id.c_str(),
                      r.mean_lab_l2, r.psnr_db, r.ssim);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-24s %12.4f %10.3f %8.4f\n", "MEAN", report.mean_lab_l2,
                  report.psnr_db, report.ssim);
    out << buf;
    return out.str();
}

}  // namespace enhance
