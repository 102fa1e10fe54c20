#pragma once

#include <filesystem>
#include <fstream>

#include "segmentor/types.hpp"

namespace seg {

// --- WAV -------------------------------------------------------------------
// PCM 16-bit mono little-endian only.

struct Waveform {
    std::vector<double> samples;  // in [-1, 1]
    std::uint32_t sample_rate_hz = 16000;
};

inline void validate_waveform(const Waveform& w) {
    if (w.samples.empty()) throw DataError("empty waveform");
    if (w.sample_rate_hz < 8000) throw DataError("sample rate below 8 kHz");
}

inline Waveform read_wav(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    char id[4];
    if (!is.read(id, 4) || std::memcmp(id, "RIFF", 4) != 0)
        throw DataError("not a RIFF file: " + path);
    io::read_u32(is, "RIFF size");
    if (!is.read(id, 4) || std::memcmp(id, "WAVE", 4) != 0)
        throw DataError("not a WAVE file: " + path);

    Waveform wave;
    bool have_fmt = false, have_data = false;
    while (is.read(id, 4)) {
        std::uint32_t chunk_size = io::read_u32(is, "chunk size");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            std::uint16_t audio_format = io::read_u16(is, "audio format");
            std::uint16_t channels = io::read_u16(is, "channel count");
            wave.sample_rate_hz = io::read_u32(is, "sample rate");
            io::read_u32(is, "byte rate");
            io::read_u16(is, "block align");
            std::uint16_t bits = io::read_u16(is, "bits per sample");
            if (audio_format != 1) throw DataError("unsupported WAV encoding (PCM only): " + path);
            if (channels != 1) throw DataError("unsupported channel count (mono only): " + path);
            if (bits != 16) throw DataError("unsupported sample width (16-bit only): " + path);
            if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!have_fmt) throw DataError("WAV data chunk before fmt chunk: " + path);
            std::size_t n = chunk_size / 2;
            std::vector<std::int16_t> pcm(n);
            if (!is.read(reinterpret_cast<char*>(pcm.data()),
                         static_cast<std::streamsize>(n * 2)))
                throw DataError("truncated WAV data: " + path);
            wave.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                wave.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
            have_data = true;
        } else {
            is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
        }
    }
    if (!have_fmt || !have_data) throw DataError("malformed WAV (missing fmt or data): " + path);
    validate_waveform(wave);
    return wave;
}

inline void write_wav(const std::string& path, const Waveform& wave) {
    validate_waveform(wave);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    const std::uint32_t n = static_cast<std::uint32_t>(wave.samples.size());
    const std::uint32_t data_bytes = n * 2;
    os.write("RIFF", 4);
    io::write_u32(os, 36 + data_bytes);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    io::write_u32(os, 16);
    io::write_u16(os, 1);  // PCM
    io::write_u16(os, 1);  // mono
    io::write_u32(os, wave.sample_rate_hz);
    io::write_u32(os, wave.sample_rate_hz * 2);
    io::write_u16(os, 2);
    io::write_u16(os, 16);
    os.write("data", 4);
    io::write_u32(os, data_bytes);
    for (double s : wave.samples) {
        long q = std::lrint(std::clamp(s, -1.0, 1.0) * 32768.0);
        io::write_raw<std::int16_t>(os, static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L)));
    }
    if (!os) throw DataError("write failed: " + path);
}

// --- MFCC --------------------------------------------------------------------

struct MfccConfig {
    std::size_t n_coeffs = 13;
    double window_ms = 25.0;
    double hop_ms = 10.0;
    std::size_t n_mels = 26;
    double fmin_hz = 0.0;
    double fmax_hz = 0.0;  // 0 means sample_rate / 2
    double pre_emphasis = 0.97;
};

inline void validate_mfcc_config(const MfccConfig& cfg) {
    if (cfg.hop_ms > cfg.window_ms) throw DataError("mfcc hop must not exceed the window");
    if (cfg.n_coeffs > cfg.n_mels) throw DataError("mfcc needs n_coeffs <= n_mels");
    if (cfg.n_coeffs == 0 || cfg.n_mels == 0 || cfg.window_ms <= 0 || cfg.hop_ms <= 0)
        throw DataError("mfcc config values must be positive");
}

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT.
inline void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
        double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::size_t a = i + k, b = i + k + len / 2;
                double tr = re[b] * cr - im[b] * ci;
                double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace detail

// Triangular filters on the HTK mel scale, evaluated at FFT bin centers.
// Rows are filters, columns the nfft/2 + 1 magnitude bins.
inline Matrix mel_filterbank(std::size_t n_mels, std::size_t nfft, double sample_rate,
                             double fmin, double fmax) {
    const std::size_t bins = nfft / 2 + 1;
    double mel_lo = detail::hz_to_mel(fmin), mel_hi = detail::hz_to_mel(fmax);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = detail::mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                                  static_cast<double>(n_mels + 1));
    Matrix fb(n_mels, bins);
    for (std::size_t m = 0; m < n_mels; ++m) {
        double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
            double w = 0.0;
            if (f >= lo && f <= center && center > lo)
                w = (f - lo) / (center - lo);
            else if (f > center && f <= hi && hi > center)
                w = (hi - f) / (hi - center);
            fb(m, k) = w;
        }
    }
    return fb;
}

// Orthonormal DCT-II: row 0 scaled by sqrt(1/M), rows j >= 1 by sqrt(2/M);
// the full M x M matrix times its transpose is the identity.
inline Matrix dct_matrix(std::size_t n_rows, std::size_t M) {
    Matrix C(n_rows, M);
    const double pi = 3.14159265358979323846;
    for (std::size_t j = 0; j < n_rows; ++j) {
        double scale = j == 0 ? std::sqrt(1.0 / static_cast<double>(M))
                              : std::sqrt(2.0 / static_cast<double>(M));
        for (std::size_t k = 0; k < M; ++k)
            C(j, k) = scale * std::cos(pi * static_cast<double>(j) *
                                       (2.0 * static_cast<double>(k) + 1.0) /
                                       (2.0 * static_cast<double>(M)));
    }
    return C;
}

// Frame count for sliding analysis windows: T = 1 + floor((N - W) / hop).
inline std::size_t mfcc_frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
    if (n_samples < window) throw DataError("waveform shorter than one analysis window");
    return 1 + (n_samples - window) / hop;
}

// Pre-emphasis -> Hamming window -> magnitude FFT -> mel filterbank ->
// log (floored at 1e-10) -> orthonormal DCT-II, keeping the first n_coeffs
// coefficients including C0.
inline FeatureSequence mfcc(const Waveform& wave, const MfccConfig& cfg = {}) {
    validate_mfcc_config(cfg);
    validate_waveform(wave);
    const double sr = static_cast<double>(wave.sample_rate_hz);
    const std::size_t W = static_cast<std::size_t>(std::lround(cfg.window_ms * sr / 1000.0));
    const std::size_t hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * sr / 1000.0));
    const std::size_t T = mfcc_frame_count(wave.samples.size(), W, hop);
    const std::size_t nfft = detail::next_pow2(W);
    const std::size_t bins = nfft / 2 + 1;
    const double fmax = cfg.fmax_hz > 0.0 ? cfg.fmax_hz : sr / 2.0;

    std::vector<double> emphasized(wave.samples.size());
    emphasized[0] = wave.samples[0];
    for (std::size_t n = 1; n < wave.samples.size(); ++n)
        emphasized[n] = wave.samples[n] - cfg.pre_emphasis * wave.samples[n - 1];

    std::vector<double> hamming(W);
    for (std::size_t n = 0; n < W; ++n)
        hamming[n] = 0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(n) /
                                            static_cast<double>(W - 1));

    Matrix fb = mel_filterbank(cfg.n_mels, nfft, sr, cfg.fmin_hz, fmax);
    Matrix dct = dct_matrix(cfg.n_coeffs, cfg.n_mels);

    FeatureSequence seq;
    seq.values = Matrix(T, cfg.n_coeffs);
    seq.frame_period_ms = cfg.hop_ms;

    std::vector<double> re(nfft), im(nfft), mags(bins), mel(cfg.n_mels);
    for (std::size_t t = 0; t < T; ++t) {
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
        const double* frame = emphasized.data() + t * hop;
        for (std::size_t n = 0; n < W; ++n) re[n] = frame[n] * hamming[n];
        detail::fft_radix2(re, im);
        for (std::size_t k = 0; k < bins; ++k) mags[k] = std::hypot(re[k], im[k]);
        for (std::size_t m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            const double* w = fb.row(m);
            for (std::size_t k = 0; k < bins; ++k) acc += w[k] * mags[k];
            mel[m] = std::log(std::max(acc, 1e-10));
        }
        for (std::size_t j = 0; j < cfg.n_coeffs; ++j) {
            double acc = 0.0;
            const double* c = dct.row(j);
            for (std::size_t m = 0; m < cfg.n_mels; ++m) acc += c[m] * mel[m];
            seq.values(t, j) = acc;
        }
    }
    return seq;
}

// --- feature files ------------------------------------------------------------
// Magic "SEGF", version u16, T u32, D u32, frame_period_ms f64, then T*D
// doubles row-major, all little-endian. Round-trips bit-exactly.

inline constexpr char kFeatureMagic[4] = {'S', 'E', 'G', 'F'};
inline constexpr std::uint16_t kFeatureFormatVersion = 1;

inline void write_features(const std::string& path, const FeatureSequence& seq) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os.write(kFeatureMagic, 4);
    io::write_u16(os, kFeatureFormatVersion);
    io::write_u32(os, static_cast<std::uint32_t>(seq.frames()));
    io::write_u32(os, static_cast<std::uint32_t>(seq.dim()));
    io::write_f64(os, seq.frame_period_ms);
    io::write_f64_array(os, seq.values.data());
    if (!os) throw DataError("write failed: " + path);
}

struct FeatureHeader {
    std::size_t frames = 0;
    std::size_t dim = 0;
    double frame_period_ms = 10.0;
};

namespace detail {

inline FeatureHeader read_feature_header(std::istream& is, const std::string& path) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw DataError("bad feature-file magic: " + path);
    std::uint16_t version = io::read_u16(is, "feature version");
    if (version != kFeatureFormatVersion)
        throw DataError("unsupported feature-file version in " + path);
    FeatureHeader h;
    h.frames = io::read_u32(is, "frame count");
    h.dim = io::read_u32(is, "feature dim");
    h.frame_period_ms = io::read_f64(is, "frame period");
    return h;
}

}  // namespace detail

inline FeatureHeader read_features_header(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    return detail::read_feature_header(is, path);
}

inline FeatureSequence read_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    FeatureHeader h = detail::read_feature_header(is, path);
    FeatureSequence seq;
    seq.values = Matrix(h.frames, h.dim);
    seq.frame_period_ms = h.frame_period_ms;
    seq.source_id = path;
    io::read_f64_array(is, seq.values.data(), path.c_str());
    return seq;
}

// --- manifests -----------------------------------------------------------------
// One record per line: path <TAB> onset_frame <TAB> offset_frame. Lines
// beginning with '#' are ignored. Relative paths resolve against the
// manifest's directory. Loading is fail-closed: any invalid record aborts.

struct ManifestRecord {
    std::string path;
    TimingPair label;
};

struct DatasetManifest {
    std::string split;
    std::vector<ManifestRecord> records;
};

inline DatasetManifest load_manifest(const std::string& manifest_path, const std::string& split) {
    std::ifstream is(manifest_path);
    if (!is) throw DataError("cannot open manifest: " + manifest_path);
    const auto base = std::filesystem::path(manifest_path).parent_path();

    DatasetManifest out;
    out.split = split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab1 = line.find('\t');
        auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw DataError(manifest_path + ":" + std::to_string(line_no) +
                            ": expected path<TAB>onset<TAB>offset");
        ManifestRecord rec;
        std::filesystem::path p(line.substr(0, tab1));
        rec.path = (p.is_absolute() ? p : base / p).string();
        try {
            rec.label.onset = std::stoull(line.substr(tab1 + 1, tab2 - tab1 - 1));
            rec.label.offset = std::stoull(line.substr(tab2 + 1));
        } catch (const std::exception&) {
            throw DataError(manifest_path + ":" + std::to_string(line_no) + ": bad frame index");
        }
        if (!(rec.label.onset < rec.label.offset))
            throw DataError(manifest_path + ":" + std::to_string(line_no) +
                            ": onset must precede offset");
        if (rec.path.ends_with(".segf")) {
            FeatureHeader h = read_features_header(rec.path);
            if (rec.label.offset > h.frames - 1)
                throw DataError(manifest_path + ":" + std::to_string(line_no) +
                                ": boundary beyond the file's " + std::to_string(h.frames) +
                                " frames");
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

inline void save_manifest(const std::string& path, const DatasetManifest& manifest,
                          const std::vector<std::string>& relative_paths) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
        os << relative_paths[i] << '\t' << manifest.records[i].label.onset << '\t'
           << manifest.records[i].label.offset << '\n';
    if (!os) throw DataError("write failed: " + path);
}

// --- dataset loading ---------------------------------------------------------

struct LoadedDataset {
    std::vector<FeatureSequence> seqs;
    std::vector<TimingPair> labels;
};

inline LoadedDataset load_dataset(const DatasetManifest& manifest,
                                  const MfccConfig& wav_cfg = {}) {
    LoadedDataset out;
    for (const auto& rec : manifest.records) {
        FeatureSequence seq;
        if (rec.path.ends_with(".wav")) {
            seq = mfcc(read_wav(rec.path), wav_cfg);
            seq.source_id = rec.path;
        } else {
            seq = read_features(rec.path);
        }
        validate_sequence(seq);
        validate_pair(rec.label, seq.frames());
        out.seqs.push_back(std::move(seq));
        out.labels.push_back(rec.label);
    }
    return out;
}

}  // namespace seg
