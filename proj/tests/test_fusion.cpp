#include <gtest/gtest.h>

#include <optional>

#include "tamperloc/fusion.hpp"

namespace tamperloc {
namespace {

TamperMask stripe(int x0, int x1, MaskSource source) {
  TamperMask m(16, 8, source);
  for (int y = 0; y < 8; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  }
  return m;
}

enum class CopyState { kAbsent, kEmpty, kNonempty };

// Reference decision tree, written out case by case.
TamperMask expected(CopyState cm, bool prnu_present, bool pce_high, const TamperMask& cm_mask,
                    const TamperMask& prnu_mask, const TamperMask& sp_mask) {
  TamperMask out(16, 8, MaskSource::kFused);
  if (cm == CopyState::kNonempty) {
    out |= cm_mask;
    if (prnu_present && pce_high) out |= prnu_mask;
    return out;
  }
  out |= prnu_present ? prnu_mask : sp_mask;
  return out;
}

TEST(Fusion, TruthTableOverAllTwelveCases) {
  const TamperMask cm = stripe(0, 4, MaskSource::kCopyMove);
  const TamperMask prnu = stripe(6, 10, MaskSource::kPrnu);
  const TamperMask sp = stripe(12, 16, MaskSource::kSplicing);
  int cases = 0;
  for (CopyState state : {CopyState::kAbsent, CopyState::kEmpty, CopyState::kNonempty}) {
    for (bool prnu_present : {false, true}) {
      for (bool pce_high : {false, true}) {
        FusionInput in;
        if (state == CopyState::kEmpty) in.copymove = TamperMask(16, 8, MaskSource::kCopyMove);
        if (state == CopyState::kNonempty) in.copymove = cm;
        if (prnu_present) in.prnu = prnu;
        in.prnu_pce = pce_high ? 1500.0 : 800.0;
        in.splicing = sp;
        const TamperMask got = fuse_masks(in);
        EXPECT_TRUE(got.same_bits(expected(state, prnu_present, pce_high, cm, prnu, sp)))
            << "copymove state " << static_cast<int>(state) << " prnu " << prnu_present << " high " << pce_high;
        EXPECT_EQ(got.source(), MaskSource::kFused);
        EXPECT_EQ(got.width(), 16);
        EXPECT_EQ(got.height(), 8);
        ++cases;
      }
    }
  }
  EXPECT_EQ(cases, 12);
}

TEST(Fusion, OverrideBoundaryIsStrictAndMonotone) {
  FusionInput in;
  in.copymove = stripe(0, 4, MaskSource::kCopyMove);
  in.prnu = stripe(2, 9, MaskSource::kPrnu);
  in.splicing = stripe(12, 16, MaskSource::kSplicing);
  std::optional<TamperMask> previous;
  for (double pce : {0.0, 1000.0, 1199.999, 1200.0, 1200.001, 5000.0}) {
    in.prnu_pce = pce;
    const TamperMask out = fuse_masks(in);
    if (pce <= 1200.0) {
      EXPECT_TRUE(out.same_bits(*in.copymove)) << pce;
    } else {
      TamperMask u = *in.copymove;
      u |= *in.prnu;
      EXPECT_TRUE(out.same_bits(u)) << pce;
    }
    if (previous) {
      for (std::size_t i = 0; i < out.size(); ++i) EXPECT_TRUE(!previous->at(i) || out.at(i));
    }
    previous = out;
  }
}

TEST(Fusion, DocumentedExamples) {
  const TamperMask cm = stripe(0, 4, MaskSource::kCopyMove);
  const TamperMask prnu = stripe(6, 10, MaskSource::kPrnu);
  const TamperMask sp = stripe(12, 16, MaskSource::kSplicing);

  FusionInput high{cm, prnu, 1500.0, sp};
  EXPECT_EQ(fuse_masks(high).count(), cm.count() + prnu.count());

  FusionInput low{cm, prnu, 800.0, sp};
  EXPECT_TRUE(fuse_masks(low).same_bits(cm));

  FusionInput only_splicing{std::nullopt, std::nullopt, std::nullopt, sp};
  EXPECT_TRUE(fuse_masks(only_splicing).same_bits(sp));
}

TEST(Fusion, PrnuWithoutPceNeverJoinsCopyMove) {
  FusionInput in{stripe(0, 4, MaskSource::kCopyMove), stripe(6, 10, MaskSource::kPrnu), std::nullopt,
                 stripe(12, 16, MaskSource::kSplicing)};
  EXPECT_TRUE(fuse_masks(in).same_bits(*in.copymove));
}

TEST(Fusion, DimensionMismatchThrows) {
  FusionInput in;
  in.splicing = TamperMask(16, 8, MaskSource::kSplicing);
  in.prnu = TamperMask(8, 8, MaskSource::kPrnu);
  EXPECT_THROW(fuse_masks(in), std::invalid_argument);
}

}  // namespace
}  // namespace tamperloc
