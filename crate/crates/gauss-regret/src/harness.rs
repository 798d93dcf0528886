//! Placeholder, implemented in a later commit of this change.
