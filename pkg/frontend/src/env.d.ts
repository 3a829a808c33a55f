// Asset imports handled by the bundler.
declare module "*.css";
