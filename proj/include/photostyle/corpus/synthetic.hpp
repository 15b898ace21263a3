#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "photostyle/core/error.hpp"
#include "photostyle/core/rng.hpp"
#include "photostyle/corpus/manifest.hpp"

namespace photostyle {

// Procedural stand-in for a scraped photography corpus. Every style owns a
// recipe (hue, saturation band, texture family, frequency, noise level) and
// every image adds seeded per-image jitter, so classes are separable but not
// trivially constant. Generation is byte-deterministic under (spec, seed).

enum class TextureFamily {
    horizontal_stripes,
    vertical_stripes,
    checker,
    rings,
    diagonal_gradient,
    blobs
};

inline std::string to_string(TextureFamily t) {
    switch (t) {
        case TextureFamily::horizontal_stripes: return "horizontal_stripes";
        case TextureFamily::vertical_stripes: return "vertical_stripes";
        case TextureFamily::checker: return "checker";
        case TextureFamily::rings: return "rings";
        case TextureFamily::diagonal_gradient: return "diagonal_gradient";
        case TextureFamily::blobs: return "blobs";
    }
    throw ValidationError("unknown texture family");
}

struct StyleRecipe {
    std::string name;
    double base_hue = 0.0;       // [0,1)
    double saturation = 0.8;     // [0,1]
    TextureFamily texture = TextureFamily::horizontal_stripes;
    double frequency = 3.0;      // pattern cycles per image
    double noise_sigma = 0.02;   // additive pixel noise in [0,1] units

    bool operator==(const StyleRecipe& o) const {
        return base_hue == o.base_hue && saturation == o.saturation &&
               texture == o.texture && frequency == o.frequency &&
               noise_sigma == o.noise_sigma;
    }
};

struct SyntheticCorpusSpec {
    int num_styles = 10;
    int images_per_style = 50;
    int image_height = 32;
    int image_width = 32;
    std::vector<StyleRecipe> recipes;  // size num_styles

    void validate() const {
        if (num_styles < 2) throw ValidationError("synthetic: num_styles must be >= 2");
        if (images_per_style < 1)
            throw ValidationError("synthetic: images_per_style must be >= 1");
        if (image_height < 8 || image_width < 8)
            throw ValidationError("synthetic: image size must be at least 8x8");
        if (static_cast<int>(recipes.size()) != num_styles)
            throw ValidationError("synthetic: need exactly one recipe per style");
        for (std::size_t i = 0; i < recipes.size(); ++i)
            for (std::size_t j = i + 1; j < recipes.size(); ++j)
                if (recipes[i] == recipes[j])
                    throw ValidationError("synthetic: recipes for '" + recipes[i].name +
                                          "' and '" + recipes[j].name + "' are not distinct");
    }
};

// Catalog of style names used by the default recipe table. Indices past the
// table fall back to numbered names.
inline std::string default_style_name(int index) {
    static const char* kNames[] = {
        "aerial",     "architecture", "food",       "landscape",  "macro",
        "night",      "portrait",     "sports",     "street",     "travel",
        "astro",      "documentary",  "drone",      "event",      "fashion",
        "minimalist", "monochrome",   "underwater", "wedding",    "wildlife"};
    if (index >= 0 && index < 20) return kNames[index];
    return "style" + std::to_string(index);
}

// Default recipe for global style index g. Hues follow the golden-ratio
// sequence (distinct for any count), texture family and frequency cycle so
// neighbours in hue differ in pattern as well.
inline StyleRecipe default_recipe(int g) {
    StyleRecipe r;
    r.name = default_style_name(g);
    r.base_hue = std::fmod(0.11 + g * 0.61803398874989484820, 1.0);
    r.saturation = 0.60 + 0.12 * (g % 3);
    r.texture = static_cast<TextureFamily>(g % 6);
    r.frequency = 2.0 + 1.5 * ((g / 6) % 3);
    r.noise_sigma = 0.02 + 0.01 * (g % 2);
    return r;
}

inline std::vector<StyleRecipe> default_recipes(int count, int offset = 0) {
    std::vector<StyleRecipe> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(default_recipe(offset + i));
    return out;
}

namespace detail {

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    h = h - std::floor(h);
    const double hh = h * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

struct Blob {
    double cx, cy, sigma;
};

inline double texture_value(const StyleRecipe& recipe, double u, double v, double freq,
                            double phase, const std::vector<Blob>& blobs) {
    constexpr double kTau = 6.283185307179586;
    switch (recipe.texture) {
        case TextureFamily::horizontal_stripes:
            return 0.5 + 0.5 * std::sin(kTau * (freq * v + phase));
        case TextureFamily::vertical_stripes:
            return 0.5 + 0.5 * std::sin(kTau * (freq * u + phase));
        case TextureFamily::checker: {
            const int cu = static_cast<int>(std::floor(u * freq + phase));
            const int cv = static_cast<int>(std::floor(v * freq + phase));
            return ((cu + cv) & 1) ? 0.85 : 0.15;
        }
        case TextureFamily::rings: {
            const double du = u - 0.5, dv = v - 0.5;
            return 0.5 + 0.5 * std::sin(kTau * (freq * std::sqrt(du * du + dv * dv) + phase));
        }
        case TextureFamily::diagonal_gradient: {
            const double t = freq * (u + v) * 0.5 + phase;
            return t - std::floor(t);
        }
        case TextureFamily::blobs: {
            double acc = 0.0;
            for (const auto& b : blobs) {
                const double du = u - b.cx, dv = v - b.cy;
                acc += std::exp(-(du * du + dv * dv) / (2.0 * b.sigma * b.sigma));
            }
            return std::min(1.0, acc);
        }
    }
    return 0.5;
}

}  // namespace detail

inline RgbImage render_style_image(const StyleRecipe& recipe, int height, int width, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double phase = unit(rng);
    const double freq = recipe.frequency * (0.9 + 0.2 * unit(rng));
    const double hue_jitter = (unit(rng) - 0.5) * 0.03;

    std::vector<detail::Blob> blobs;
    if (recipe.texture == TextureFamily::blobs) {
        const int n = 3 + static_cast<int>(unit(rng) * 3.0);
        for (int i = 0; i < n; ++i)
            blobs.push_back({unit(rng), unit(rng), 0.08 + 0.08 * unit(rng)});
    }

    RgbImage img;
    img.height = height;
    img.width = width;
    img.pixels.resize(static_cast<std::size_t>(height) * width * 3);
    for (int y = 0; y < height; ++y) {
        const double v = (y + 0.5) / height;
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / width;
            const double p = detail::texture_value(recipe, u, v, freq, phase, blobs);
            double r, g, b;
            detail::hsv_to_rgb(recipe.base_hue + hue_jitter, recipe.saturation,
                               0.30 + 0.60 * p, r, g, b);
            const double rgb[3] = {r, g, b};
            for (int c = 0; c < 3; ++c) {
                const double noisy = rgb[c] + recipe.noise_sigma * gauss(rng);
                img.at(y, x, c) = static_cast<std::uint8_t>(
                    std::lround(std::clamp(noisy, 0.0, 1.0) * 255.0));
            }
        }
    }
    return img;
}

inline DatasetManifest generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                                 std::uint64_t seed,
                                                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    spec.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw RuntimeError("synthetic: cannot create output directory " + out_dir);

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.provenance = "synthetic";
    for (int k = 0; k < spec.num_styles; ++k)
        manifest.labels.push_back({k, spec.recipes[static_cast<std::size_t>(k)].name});
    manifest.validate();  // catches duplicate recipe names up front

    for (int k = 0; k < spec.num_styles; ++k) {
        const auto& recipe = spec.recipes[static_cast<std::size_t>(k)];
        const fs::path class_dir = fs::path(out_dir) / recipe.name;
        fs::create_directories(class_dir, ec);
        for (int i = 0; i < spec.images_per_style; ++i) {
            Rng rng(derive_seed(seed, "synthetic-image", static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(i)));
            const RgbImage img =
                render_style_image(recipe, spec.image_height, spec.image_width, rng);
            char name[32];
            std::snprintf(name, sizeof(name), "img_%05d.ppm", i);
            const std::string path = (class_dir / name).string();
            write_ppm(path, img);
            manifest.records.push_back({path, k, Split::unassigned, Source::synthetic});
        }
    }
    return manifest;
}

}  // namespace photostyle
