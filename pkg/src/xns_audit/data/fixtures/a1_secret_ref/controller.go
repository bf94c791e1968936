package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler reconciles App objects.
type AppReconciler struct {
	client.Client
}

// Reconcile loads the Secret referenced by an App.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, client.IgnoreNotFound(err)
	}

	secretRef := app.Spec.SecretRef
	namespacedName := types.NamespacedName{
		Name:      secretRef.Name,
		Namespace: secretRef.Namespace,
	}

	secret := &corev1.Secret{}
	if err := r.Get(ctx, namespacedName, secret); err != nil {
		return ctrl.Result{}, err
	}
	return r.consume(app, secret)
}

func (r *AppReconciler) consume(app *App, secret *corev1.Secret) (ctrl.Result, error) {
	if len(secret.Data) == 0 {
		return ctrl.Result{Requeue: true}, nil
	}
	app.Status.Ready = true
	return ctrl.Result{}, nil
}
