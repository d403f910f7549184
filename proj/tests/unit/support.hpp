#pragma once

#include <doctest.h>

#include <functional>
#include <vector>

#include "ddfv/errors.hpp"
#include "ddfv/mesh.hpp"
#include "meshes.hpp"

namespace testing {

inline ddfv::ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ddfv::Error& e) {
        return e.kind();
    }
    FAIL("expected a ddfv::Error");
    return ddfv::ErrorKind::InvalidArgument;
}

}  // namespace testing
