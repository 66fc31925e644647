export class TemplateError extends Error {}

export class AuthError extends Error {}

export class DimensionError extends Error {}

export class FetchFailure extends Error {
  status?: number;

  constructor(message: string, status?: number) {
    super(message);
    this.status = status;
  }
}
