#pragma once

#include <string>
#include <vector>

#include "enhance/image.hpp"

namespace enhance {

inline constexpr double kPsnrCapDb = 99.0;

// 10*log10(1/MSE) over all channels of [0,1] images; identical images
// return kPsnrCapDb.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01 K2=0.03,
// dynamic range 1.0, per channel then averaged. Requires min(H,W) >= 11.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

struct EvalRow {
    std::string id;
    double mean_lab_l2 = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    double mean_lab_l2 = 0.0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::vector<EvalRow> per_image_rows;
};

EvalReport evaluate_pairs(const std::vector<std::pair<ImageBuffer, ImageBuffer>>& pairs,
                          const std::vector<std::string>& ids = {});

// CSV: header id,mean_lab_l2,psnr_db,ssim plus a final MEAN row.
void write_report_csv(const EvalReport& report, const std::string& path);
std::string format_report_table(const EvalReport& report);

}  // namespace enhance
