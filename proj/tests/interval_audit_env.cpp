// Linked into every unit suite: after all tests, no measure interval
// produced in the process may have had lo > hi.

#include "conelab/interval.hpp"

#include <gtest/gtest.h>

namespace {

class IntervalAuditEnvironment : public ::testing::Environment {
public:
    void TearDown() override
    {
        const conelab::IntervalAuditSnapshot audit = conelab::interval_audit();
        EXPECT_EQ(audit.inverted, 0u) << "of " << audit.created << " intervals";
    }
};

const auto* const registered = ::testing::AddGlobalTestEnvironment(new IntervalAuditEnvironment);

} // namespace
