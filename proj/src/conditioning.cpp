#include "dentocc/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "dentocc/error.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

void validate_patch(const PatchImage& patch) {
    if (patch.rows != kPatchSize || patch.cols != kPatchSize || patch.pixels.size() != kPatchSize * kPatchSize) {
        throw DimensionError("patch must be 64x64, got " + std::to_string(patch.rows) + "x" + std::to_string(patch.cols));
    }
    for (double v : patch.pixels) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("patch intensity outside [0,1]");
    }
}

GrayImage resample_bilinear(const GrayImage& src, std::size_t rows, std::size_t cols) {
    if (src.rows == 0 || src.cols == 0 || rows == 0 || cols == 0) throw DimensionError("resample of empty image");
    GrayImage out(rows, cols);
    auto source_coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
        if (n_out == 1 || n_in == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const double sr = source_coord(r, rows, src.rows);
        const auto r0 = std::min(static_cast<std::size_t>(sr), src.rows - 1);
        const auto r1 = std::min(r0 + 1, src.rows - 1);
        const double fr = sr - static_cast<double>(r0);
        for (std::size_t c = 0; c < cols; ++c) {
            const double sc = source_coord(c, cols, src.cols);
            const auto c0 = std::min(static_cast<std::size_t>(sc), src.cols - 1);
            const auto c1 = std::min(c0 + 1, src.cols - 1);
            const double fc = sc - static_cast<double>(c0);
            const double top = (1.0 - fc) * src.at(r0, c0) + fc * src.at(r0, c1);
            const double bottom = (1.0 - fc) * src.at(r1, c0) + fc * src.at(r1, c1);
            out.at(r, c) = (1.0 - fr) * top + fr * bottom;
        }
    }
    return out;
}

PatchImage extract_patch(const GrayImage& px_image, const GrayImage& seg_channel, double threshold) {
    if (!px_image.same_size(seg_channel)) throw DimensionError("extract_patch: image and segmentation sizes differ");
    if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("extract_patch: threshold must lie in (0,1)");

    std::size_t r_min = px_image.rows, r_max = 0, c_min = px_image.cols, c_max = 0;
    bool any = false;
    for (std::size_t r = 0; r < px_image.rows; ++r) {
        for (std::size_t c = 0; c < px_image.cols; ++c) {
            if (seg_channel.at(r, c) >= threshold) {
                any = true;
                r_min = std::min(r_min, r);
                r_max = std::max(r_max, r);
                c_min = std::min(c_min, c);
                c_max = std::max(c_max, c);
            }
        }
    }
    if (!any) throw EmptyMaskError("extract_patch: no pixel reaches threshold " + std::to_string(threshold));

    const auto height = static_cast<std::ptrdiff_t>(r_max - r_min + 1);
    const auto width = static_cast<std::ptrdiff_t>(c_max - c_min + 1);
    const std::ptrdiff_t side = std::max(height, width);
    const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(r_min) - (side - height) / 2;
    const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(c_min) - (side - width) / 2;

    GrayImage crop(static_cast<std::size_t>(side), static_cast<std::size_t>(side));
    for (std::ptrdiff_t r = 0; r < side; ++r) {
        for (std::ptrdiff_t c = 0; c < side; ++c) {
            const std::ptrdiff_t sr = top + r, sc = left + c;
            if (sr < 0 || sc < 0 || sr >= static_cast<std::ptrdiff_t>(px_image.rows) ||
                sc >= static_cast<std::ptrdiff_t>(px_image.cols)) {
                continue;
            }
            const auto ur = static_cast<std::size_t>(sr), uc = static_cast<std::size_t>(sc);
            if (seg_channel.at(ur, uc) >= threshold) crop.at(r, c) = px_image.at(ur, uc);
        }
    }
    PatchImage patch = resample_bilinear(crop, kPatchSize, kPatchSize);
    for (auto& v : patch.pixels) v = std::clamp(v, 0.0, 1.0);
    return patch;
}

Tensor patches_to_tensor(std::span<const PatchImage> patches) {
    if (patches.empty()) throw DimensionError("patches_to_tensor: no patches");
    std::vector<double> values;
    values.reserve(patches.size() * kPatchSize * kPatchSize);
    for (const auto& p : patches) {
        validate_patch(p);
        values.insert(values.end(), p.pixels.begin(), p.pixels.end());
    }
    return Tensor({patches.size(), 1, kPatchSize, kPatchSize}, std::move(values));
}

// ---------------------------------------------------------------------------

ClassEmbedding::ClassEmbedding(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> values(kNumToothClasses * dim);
    for (auto& v : values) v = rng.normal(0.0, 0.02);
    table_ = Tensor({static_cast<std::size_t>(kNumToothClasses), dim}, std::move(values), true);
}

Tensor ClassEmbedding::embed(std::span<const ToothClass> classes) const {
    std::vector<std::size_t> rows;
    rows.reserve(classes.size());
    for (auto c : classes) rows.push_back(c.row());
    return gather_rows(table_, rows);
}

// ---------------------------------------------------------------------------

Tensor conv2d_stride2(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 4 || weight.rank() != 4 || bias.rank() != 1) {
        throw DimensionError("conv2d: expected x [S,C,H,W], weight [O,C,3,3], bias [O]");
    }
    const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = weight.dim(0);
    if (weight.dim(1) != cin || weight.dim(2) != 3 || weight.dim(3) != 3 || bias.dim(0) != cout) {
        throw DimensionError("conv2d: weight " + shape_str(weight.shape()) + " incompatible with input " +
                             shape_str(x.shape()));
    }
    const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
    const double* xs = x.data().data();
    const double* ws = weight.data().data();
    const double* bs = bias.data().data();
    std::vector<double> out(batch * cout * oh * ow);

    // Visits every (output, input, tap) triple that lies inside the image.
    auto for_each_tap = [=](auto&& fn) {
        for (std::size_t s = 0; s < batch; ++s)
            for (std::size_t o = 0; o < cout; ++o)
                for (std::size_t i = 0; i < oh; ++i)
                    for (std::size_t j = 0; j < ow; ++j) {
                        const std::size_t oi = ((s * cout + o) * oh + i) * ow + j;
                        for (std::size_t c = 0; c < cin; ++c)
                            for (std::size_t ky = 0; ky < 3; ++ky) {
                                const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(2 * i + ky) - 1;
                                if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                                for (std::size_t kx = 0; kx < 3; ++kx) {
                                    const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(2 * j + kx) - 1;
                                    if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                                    const std::size_t xi =
                                        ((s * cin + c) * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx);
                                    const std::size_t wi = ((o * cin + c) * 3 + ky) * 3 + kx;
                                    fn(oi, xi, wi);
                                }
                            }
                    }
    };

    for (std::size_t s = 0; s < batch; ++s)
        for (std::size_t o = 0; o < cout; ++o)
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>((s * cout + o) * oh * ow), oh * ow, bs[o]);
    for_each_tap([&](std::size_t oi, std::size_t xi, std::size_t wi) { out[oi] += xs[xi] * ws[wi]; });

    auto xn = x.node(), wn = weight.node(), bn = bias.node();
    return detail::make_result({batch, cout, oh, ow}, std::move(out), {x, weight, bias},
                               [xn, wn, bn, for_each_tap, batch, cout, oh, ow](detail::Node& self) {
        const double* dy = self.grad.data();
        double* gx = xn->requires_grad ? xn->grad_buffer().data() : nullptr;
        double* gw = wn->requires_grad ? wn->grad_buffer().data() : nullptr;
        for_each_tap([&](std::size_t oi, std::size_t xi, std::size_t wi) {
            if (gx) gx[xi] += dy[oi] * wn->value[wi];
            if (gw) gw[wi] += dy[oi] * xn->value[xi];
        });
        if (bn->requires_grad) {
            auto gb = bn->grad_buffer();
            for (std::size_t s = 0; s < batch; ++s)
                for (std::size_t o = 0; o < cout; ++o)
                    for (std::size_t k = 0; k < oh * ow; ++k) gb[o] += dy[(s * cout + o) * oh * ow + k];
        }
    }, "conv2d");
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.rank() != 4) throw DimensionError("global_avg_pool: expected [S,C,H,W], got " + shape_str(x.shape()));
    const std::size_t batch = x.dim(0), ch = x.dim(1), area = x.dim(2) * x.dim(3);
    std::vector<double> out(batch * ch, 0.0);
    for (std::size_t sc = 0; sc < batch * ch; ++sc) {
        double s = 0.0;
        for (std::size_t k = 0; k < area; ++k) s += x.data()[sc * area + k];
        out[sc] = s / static_cast<double>(area);
    }
    auto xn = x.node();
    return detail::make_result({batch, ch}, std::move(out), {x}, [xn, batch, ch, area](detail::Node& self) {
        auto g = xn->grad_buffer();
        for (std::size_t sc = 0; sc < batch * ch; ++sc) {
            const double d = self.grad[sc] / static_cast<double>(area);
            for (std::size_t k = 0; k < area; ++k) g[sc * area + k] += d;
        }
    }, "global_avg_pool");
}

PatchEncoder::PatchEncoder(std::size_t out_dim, std::uint64_t seed) {
    Rng rng(seed);
    constexpr std::size_t widths[kStages + 1] = {1, 8, 16, 32, 64};
    for (std::size_t s = 0; s < kStages; ++s) {
        const std::size_t cin = widths[s], cout = widths[s + 1];
        const double stddev = std::sqrt(2.0 / static_cast<double>(cin * 9));
        std::vector<double> w(cout * cin * 9);
        for (auto& v : w) v = rng.normal(0.0, stddev);
        stages_.push_back({Tensor({cout, cin, 3, 3}, std::move(w), true), Tensor({cout}, true)});
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[kStages]));
    std::vector<double> fc(widths[kStages] * out_dim);
    for (auto& v : fc) v = rng.uniform(-bound, bound);
    fc_weight_ = Tensor({widths[kStages], out_dim}, std::move(fc), true);
    fc_bias_ = Tensor({out_dim}, true);
}

Tensor PatchEncoder::encode(const Tensor& patches) const {
    if (patches.rank() != 4 || patches.dim(1) != 1 || patches.dim(2) != kPatchSize || patches.dim(3) != kPatchSize) {
        throw DimensionError("PatchEncoder: expected [S,1,64,64], got " + shape_str(patches.shape()));
    }
    Tensor h = patches;
    for (const auto& stage : stages_) h = relu(conv2d_stride2(h, stage.weight, stage.bias));
    return linear(global_avg_pool(h), fc_weight_, fc_bias_);
}

Tensor PatchEncoder::encode(const PatchImage& patch) const {
    return encode(patches_to_tensor(std::span<const PatchImage>(&patch, 1)));
}

Tensor make_condition(const Tensor& class_vec, const Tensor& patch_vec) {
    if (class_vec.shape() != patch_vec.shape()) {
        throw DimensionError("make_condition: " + shape_str(class_vec.shape()) + " vs " + shape_str(patch_vec.shape()));
    }
    return add(class_vec, patch_vec);
}

}  // namespace dentocc
