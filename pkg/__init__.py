__version__="1.0.1"

# VERSIONING STANDARD: X.Y.Z
# X -> Major release version: any change that alters reported estimates, test statistics
#   or the CSV/JSON report schema is released by upgrading this major version number.
# Y -> Minor release version: new subcommands, options or families that are backward-compatible
#   are released by changing this minor version number.
# Z -> Patch release version: If just bug fixes are included, a release is completed
#   by updating this patch version number.

# REMEMBER TO TAG THE COMMIT WHEN YOU CHANGE THE VERSION: git tag -a vX.Y.Z -m 'version X.Y.Z'
