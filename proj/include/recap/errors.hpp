#pragma once

#include <stdexcept>
#include <string>

namespace recap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define RECAP_DEFINE_ERROR(Name)                                        \
  struct Name : Error {                                                 \
    explicit Name(const std::string& m = #Name) : Error(m) {}           \
  };

// cloud-sim
RECAP_DEFINE_ERROR(UnknownFlavor)
RECAP_DEFINE_ERROR(UnknownImage)
RECAP_DEFINE_ERROR(NameInUse)
RECAP_DEFINE_ERROR(PoolExhausted)
RECAP_DEFINE_ERROR(UnknownVm)
RECAP_DEFINE_ERROR(AlreadyDestroyed)
RECAP_DEFINE_ERROR(UnknownObject)

// wms-sim
RECAP_DEFINE_ERROR(CyclicDag)
RECAP_DEFINE_ERROR(DagFormatError)
RECAP_DEFINE_ERROR(NoResources)
RECAP_DEFINE_ERROR(UnknownWorkflow)
RECAP_DEFINE_ERROR(NotRunning)
RECAP_DEFINE_ERROR(VmNotRunning)

// recap-store
RECAP_DEFINE_ERROR(StoreError)
RECAP_DEFINE_ERROR(DuplicateWmsWfid)
RECAP_DEFINE_ERROR(DuplicateMapping)

// mappers / replay / comparator
RECAP_DEFINE_ERROR(WorkflowStillRunning)
RECAP_DEFINE_ERROR(IncompleteProvenance)
RECAP_DEFINE_ERROR(MalformedHostLine)

// config / cli
RECAP_DEFINE_ERROR(ConfigError)

#undef RECAP_DEFINE_ERROR

}  // namespace recap
