# GeLasso source package
