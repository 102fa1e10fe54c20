#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "segmentor/features_io.hpp"
#include "test_util.hpp"

using namespace seg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("segtest_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST(Wav, AllZeroPcmReadsAsZeros) {
    auto dir = temp_dir("wav_zero");
    Waveform w;
    w.sample_rate_hz = 16000;
    w.samples.assign(400, 0.0);
    write_wav((dir / "z.wav").string(), w);
    Waveform r = read_wav((dir / "z.wav").string());
    EXPECT_EQ(r.samples.size(), 400u);
    for (double s : r.samples) EXPECT_EQ(s, 0.0);
}

TEST(Wav, FullScaleNegativeMapsToMinusOne) {
    auto dir = temp_dir("wav_fs");
    // write one sample of -32768 by hand through the writer's clamp
    Waveform w;
    w.samples = {-1.0, 1.0};
    write_wav((dir / "f.wav").string(), w);
    Waveform r = read_wav((dir / "f.wav").string());
    EXPECT_EQ(r.samples[0], -1.0);
    EXPECT_NEAR(r.samples[1], 1.0, 1.0 / 32768.0);
}

TEST(Wav, SineRoundTripWithinQuantization) {
    auto dir = temp_dir("wav_sine");
    Waveform w;
    w.sample_rate_hz = 16000;
    w.samples.resize(16000);
    for (std::size_t n = 0; n < w.samples.size(); ++n)
        w.samples[n] = 0.9 * std::sin(2.0 * 3.14159265358979323846 * 440.0 * n / 16000.0);
    write_wav((dir / "s.wav").string(), w);
    Waveform r = read_wav((dir / "s.wav").string());
    ASSERT_EQ(r.samples.size(), w.samples.size());
    for (std::size_t n = 0; n < w.samples.size(); ++n)
        ASSERT_LE(std::abs(r.samples[n] - w.samples[n]), 1.0 / 32768.0);
}

TEST(Wav, RejectsStereoAndMalformed) {
    auto dir = temp_dir("wav_bad");
    {
        std::ofstream os(dir / "garbage.wav", std::ios::binary);
        os << "not a riff file at all";
    }
    EXPECT_THROW(read_wav((dir / "garbage.wav").string()), DataError);

    // hand-build a stereo header
    std::ofstream os(dir / "stereo.wav", std::ios::binary);
    os.write("RIFF", 4);
    io::write_u32(os, 36);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    io::write_u32(os, 16);
    io::write_u16(os, 1);
    io::write_u16(os, 2);  // stereo
    io::write_u32(os, 16000);
    io::write_u32(os, 64000);
    io::write_u16(os, 4);
    io::write_u16(os, 16);
    os.write("data", 4);
    io::write_u32(os, 0);
    os.close();
    EXPECT_THROW(read_wav((dir / "stereo.wav").string()), DataError);
}

TEST(Mfcc, FrameCountFormula) {
    EXPECT_EQ(mfcc_frame_count(16000, 400, 160), 98u);
    Waveform w;
    w.sample_rate_hz = 16000;
    w.samples.assign(16000, 0.01);
    FeatureSequence seq = mfcc(w);
    EXPECT_EQ(seq.frames(), 98u);
    EXPECT_EQ(seq.dim(), 13u);
    EXPECT_EQ(seq.frame_period_ms, 10.0);
}

TEST(Mfcc, DctOrthonormal) {
    const std::size_t M = 26;
    Matrix C = dct_matrix(M, M);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < M; ++k) dot += C(i, k) * C(j, k);
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
        }
}

TEST(Mfcc, ConstantFilterbankVectorHasEnergyOnlyAtCepstralZero) {
    Matrix C = dct_matrix(13, 26);
    std::vector<double> mel(26, 3.7);
    for (std::size_t j = 0; j < 13; ++j) {
        double acc = 0.0;
        for (std::size_t m = 0; m < 26; ++m) acc += C(j, m) * mel[m];
        if (j == 0)
            EXPECT_GT(std::abs(acc), 1.0);
        else
            EXPECT_NEAR(acc, 0.0, 1e-12);
    }
}

TEST(Mfcc, ShiftByOneHopShiftsRows) {
    std::mt19937_64 rng(55);
    Waveform w;
    w.sample_rate_hz = 16000;
    w.samples.resize(8000);
    for (double& s : w.samples) s = 0.3 * uniform_sym(rng, 1.0);
    FeatureSequence a = mfcc(w);

    Waveform shifted;
    shifted.sample_rate_hz = 16000;
    shifted.samples.assign(w.samples.begin() + 160, w.samples.end());
    FeatureSequence b = mfcc(shifted);

    ASSERT_EQ(b.frames(), a.frames() - 1);
    for (std::size_t t = 1; t < b.frames(); ++t)  // row 0 feels the pre-emphasis edge
        for (std::size_t d = 0; d < 13; ++d)
            ASSERT_NEAR(b.values(t, d), a.values(t + 1, d), 1e-12);
}

TEST(Mfcc, TooShortWaveThrows) {
    Waveform w;
    w.sample_rate_hz = 16000;
    w.samples.assign(100, 0.1);
    EXPECT_THROW(mfcc(w), DataError);
}

TEST(FeatureFile, RoundTripIsBitExact) {
    auto dir = temp_dir("segf_rt");
    std::mt19937_64 rng(66);
    FeatureSequence seq;
    seq.values = segtest::random_matrix(rng, 7, 5);
    seq.frame_period_ms = 12.5;
    write_features((dir / "a.segf").string(), seq);
    FeatureSequence r = read_features((dir / "a.segf").string());
    EXPECT_TRUE(r.values == seq.values);
    EXPECT_EQ(r.frame_period_ms, 12.5);
    write_features((dir / "b.segf").string(), r);
    EXPECT_EQ(slurp(dir / "a.segf"), slurp(dir / "b.segf"));
}

TEST(FeatureFile, TruncatedFileFailsClosed) {
    auto dir = temp_dir("segf_trunc");
    std::mt19937_64 rng(67);
    FeatureSequence seq;
    seq.values = segtest::random_matrix(rng, 10, 4);
    write_features((dir / "a.segf").string(), seq);
    std::string bytes = slurp(dir / "a.segf");
    std::ofstream os(dir / "cut.segf", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    os.close();
    EXPECT_THROW(read_features((dir / "cut.segf").string()), DataError);
}

TEST(FeatureFile, WideVotShapedFeaturesLoad) {
    auto dir = temp_dir("segf_wide");
    std::mt19937_64 rng(68);
    FeatureSequence seq;
    seq.values = segtest::random_matrix(rng, 30, 63);
    write_features((dir / "v.segf").string(), seq);
    FeatureSequence r = read_features((dir / "v.segf").string());
    EXPECT_EQ(r.dim(), 63u);
    EXPECT_TRUE(r.values == seq.values);
}

TEST(Manifest, LoadsAndResolvesRelativePaths) {
    auto dir = temp_dir("manifest_ok");
    FeatureSequence seq;
    seq.values = Matrix(9, 2, 0.5);
    write_features((dir / "u.segf").string(), seq);
    {
        std::ofstream os(dir / "m.tsv");
        os << "# comment line\n";
        os << "u.segf\t2\t6\n";
    }
    DatasetManifest m = load_manifest((dir / "m.tsv").string(), "train");
    ASSERT_EQ(m.records.size(), 1u);
    EXPECT_EQ(m.records[0].label, (TimingPair{2, 6}));
    LoadedDataset ds = load_dataset(m);
    EXPECT_EQ(ds.seqs[0].frames(), 9u);
}

TEST(Manifest, RejectsDisorderedOrOutOfRangeBoundaries) {
    auto dir = temp_dir("manifest_bad");
    FeatureSequence seq;
    seq.values = Matrix(5, 2, 0.5);
    write_features((dir / "u.segf").string(), seq);
    {
        std::ofstream os(dir / "disorder.tsv");
        os << "u.segf\t4\t2\n";
    }
    EXPECT_THROW(load_manifest((dir / "disorder.tsv").string(), "train"), DataError);
    {
        std::ofstream os(dir / "range.tsv");
        os << "u.segf\t1\t7\n";
    }
    EXPECT_THROW(load_manifest((dir / "range.tsv").string(), "train"), DataError);
}
